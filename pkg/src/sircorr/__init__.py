"""Spatially correlated interference in a Poisson field of interferers.

Exact Poisson-field statistics with bounded path loss, two correlation
frameworks (selector mixtures and intensity splits) that preserve the
interference marginal while matching pairwise correlations, joint SIR CCDF
evaluators for all three models, and a Monte-Carlo simulator that validates
every analytic path.  The ``sircorr`` command drives the shipped experiment
scenarios.
"""

from .core import (
    FADING_MEAN_SQUARE,
    ModelParams,
    ORIGIN,
    Point2,
    correlation_denominator,
    interference_laplace,
    interference_mean,
    interference_variance,
    laplace_exponent,
    laplace_for_intensity,
    mean_for_intensity,
    overlap_integral,
    path_loss,
    spatial_correlation,
    variance_for_intensity,
)
from .quadrature import (
    BudgetExceededError,
    QuadratureError,
    QuadratureResult,
    QuadratureSpec,
    TailBound,
    TailTruncationError,
    integrate_r2,
    power_law_cutoff,
)
from .frameworks import (
    CorrelationMatrix,
    InfeasibleSplit,
    InfeasibleWeights,
    IntensitySplit,
    MixtureWeights,
    PointSet,
    build_correlation_matrix,
    build_intensity_split,
    check_combination_feasibility,
    from_json,
    mixture_implied_correlation,
    solve_mixture_weights,
    to_json,
)
from .ccdf import (
    DEFAULT_ASSIGNMENT_CAP,
    EnumerationCapExceeded,
    MixtureAssignment,
    SirThresholds,
    iter_assignments,
    joint_ccdf_combination,
    joint_ccdf_mixture,
    joint_ccdf_ppp,
    normalize_thresholds,
    ppp_log_ccdf_integral,
)
from .simulator import (
    CorrelationEstimate,
    DegenerateSamples,
    FieldSample,
    MonteCarloEstimate,
    MrcConfig,
    RngSeed,
    SimWindow,
    ccdf_from_sir_samples,
    estimate_interference_correlation,
    estimate_joint_ccdf,
    estimate_joint_ccdf_grid,
    estimate_sir_correlation,
    mixture_partition_weights,
    mrc_outage_mixture,
    mrc_outage_mixture_curve,
    mrc_outage_ppp,
    mrc_outage_ppp_curve,
    sample_combination_batch,
    sample_combination_model,
    sample_interference_and_sir,
    sample_mixture_batch,
    sample_mixture_model,
    sample_ppp,
    sample_sir_batch,
    simulate_field,
    simulate_field_batch,
    wilson_interval,
)

__version__ = "0.1.0"
