"""Monte-Carlo sampling of the interference field and its two surrogate models.

The field sampler draws Poisson-distributed interferers in a square window;
every observation point sees the same interferer positions (the source of
spatial correlation) with independent fading per interferer-point pair.  The
mixture and split samplers draw the surrogate constructions directly so the
analytic evaluators can be validated against their own models, not just
against the field.

Randomness is organized in named sub-streams (positions, fading, signal
fading, selectors) derived from a single seed, so that runs with a common
seed share interferer geometry across models and parameter variants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ModelParams
from .frameworks import InfeasibleWeights, IntensitySplit, MixtureWeights, PointSet
from .ccdf import (
    DEFAULT_ASSIGNMENT_CAP,
    EnumerationCapExceeded,
    SirThresholds,
    iter_assignments,
)

_Z95 = 1.959963984540054
_CHUNK_POINTS = 2_000_000

# Sub-stream identifiers.
_POSITIONS, _FADING, _SIGNAL, _SELECTORS = 0, 1, 2, 3


class DegenerateSamples(ValueError):
    """A correlation estimate was requested from zero-variance samples."""


@dataclass(frozen=True)
class RngSeed:
    """Root seed plus a sub-stream index; identical values give identical draws."""

    seed: int
    stream_id: int = 0

    def generator(self, *subkeys: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *subkeys))
        return np.random.default_rng(ss)


@dataclass(frozen=True)
class SimWindow:
    """Square sampling region [-half_width, half_width]^2."""

    half_width: float = 20.0

    def __post_init__(self):
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ValueError(f"half_width must be positive and finite, got {self.half_width}")

    @property
    def area(self) -> float:
        return 4.0 * self.half_width**2

    def mean_bias_bound(self, params: ModelParams) -> float:
        """Upper bound on the mean interference lost to window truncation."""
        w, a = self.half_width, params.alpha
        return 2.0 * math.pi * params.intensity * w ** (2.0 - a) / (a - 2.0)

    def variance_bias_bound(self, params: ModelParams) -> float:
        """Upper bound on the interference variance lost to window truncation."""
        w, a = self.half_width, params.alpha
        return 4.0 * math.pi * params.intensity * w ** (2.0 - 2.0 * a) / (2.0 * a - 2.0)


@dataclass(frozen=True, eq=False)
class FieldSample:
    """One realization of the interference and SIR vectors at the observation points."""

    interference: np.ndarray
    sir: np.ndarray


@dataclass(frozen=True)
class MrcConfig:
    """Diversity receiver scenario: branch count, reference link length, outage threshold."""

    n_branches: int
    link_distance: float
    threshold: float

    def __post_init__(self):
        if self.n_branches < 1:
            raise ValueError("need at least one branch")
        if self.link_distance < 0:
            raise ValueError("link distance must be non-negative")
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")

    def link_gain(self, params: ModelParams) -> float:
        return 1.0 / (params.epsilon + self.link_distance**params.alpha)


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    ci_low: float
    ci_high: float
    n_samples: int

    @property
    def ci_halfwidth(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def contains(self, x: float) -> bool:
        return self.ci_low <= x <= self.ci_high


@dataclass(frozen=True)
class CorrelationEstimate:
    value: float
    ci_low: float
    ci_high: float
    n_used: int
    n_dropped: int

    @property
    def ci_halfwidth(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


def wilson_interval(successes: int, n: int) -> tuple[float, float, float]:
    """Point estimate and 95% Wilson interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("need at least one trial")
    phat = successes / n
    z2 = _Z95**2
    denom = 1.0 + z2 / n
    center = (phat + z2 / (2.0 * n)) / denom
    hw = _Z95 * math.sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom
    return phat, max(0.0, center - hw), min(1.0, center + hw)


def _proportion_estimate(hits: np.ndarray) -> MonteCarloEstimate:
    n = hits.size
    phat, lo, hi = wilson_interval(int(np.count_nonzero(hits)), n)
    return MonteCarloEstimate(phat, lo, hi, n)


# ---------------------------------------------------------------------------
# Raw sampling


def sample_ppp(intensity: float, window: SimWindow, rng: RngSeed):
    """One Poisson scatter in the window, as a list of Point2."""
    from .core import Point2

    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    gen = rng.generator(_POSITIONS)
    n = gen.poisson(intensity * window.area)
    xy = gen.uniform(-window.half_width, window.half_width, size=(int(n), 2))
    return [Point2(float(x), float(y)) for x, y in xy]


def _interference_batch(coords: np.ndarray, intensity: float, alpha: float, epsilon: float,
                        window: SimWindow, size: int,
                        gpos: np.random.Generator, gfad: np.random.Generator) -> np.ndarray:
    """(size, N) interference samples; positions shared across the N points per realization."""
    n_pts = coords.shape[0]
    out = np.empty((size, n_pts))
    w = window.half_width
    mu = intensity * window.area
    per_chunk = max(1, int(_CHUNK_POINTS / max(mu, 1.0)))
    done = 0
    while done < size:
        m = min(per_chunk, size - done)
        counts = gpos.poisson(mu, size=m)
        total = int(counts.sum())
        xy = gpos.uniform(-w, w, size=(total, 2))
        idx = np.repeat(np.arange(m), counts)
        for j in range(n_pts):
            d2 = (xy[:, 0] - coords[j, 0]) ** 2 + (xy[:, 1] - coords[j, 1]) ** 2
            gains = 1.0 / (epsilon + d2 ** (alpha / 2.0))
            h = gfad.exponential(1.0, size=total)
            out[done:done + m, j] = np.bincount(idx, weights=h * gains, minlength=m)
        done += m
    return out


def simulate_field_batch(ps: PointSet, params: ModelParams, window: SimWindow,
                         size: int, rng: RngSeed) -> tuple[np.ndarray, np.ndarray]:
    """(interference, sir) sample matrices of shape (size, N) from the shared field.

    Empty realizations carry zero interference and infinite SIR (no noise term).
    """
    return sample_interference_and_sir("ppp", ps, params, window, size, rng)


def simulate_field(ps: PointSet, params: ModelParams, window: SimWindow, rng: RngSeed) -> FieldSample:
    """One realization of the shared-field interference and SIR vectors."""
    interference, sir = simulate_field_batch(ps, params, window, 1, rng)
    return FieldSample(interference[0], sir[0])


def sample_mixture_batch(Q: MixtureWeights, params: ModelParams, window: SimWindow,
                         size: int, rng: RngSeed) -> np.ndarray:
    """(size, N) interference samples from the selector-mixture construction."""
    if not Q.is_proper:
        raise InfeasibleWeights("sampling needs proper (non-negative) mixture weights")
    gpos, gfad = rng.generator(_POSITIONS), rng.generator(_FADING)
    origin = np.zeros((1, 2))
    pool = np.empty((size, Q.n))
    for k in range(Q.n):
        pool[:, k] = _interference_batch(
            origin, params.intensity, params.alpha, params.epsilon, window, size, gpos, gfad
        )[:, 0]
    gsel = rng.generator(_SELECTORS)
    out = np.empty((size, Q.n))
    rows = np.arange(size)
    for i in range(Q.n):
        choice = gsel.choice(i + 1, size=size, p=Q.row_pmf(i))
        out[:, i] = pool[rows, choice]
    return out


def sample_mixture_model(Q: MixtureWeights, params: ModelParams, window: SimWindow,
                         rng: RngSeed) -> np.ndarray:
    """One draw of the N mixture-model interference values."""
    return sample_mixture_batch(Q, params, window, 1, rng)[0]


def sample_combination_batch(split: IntensitySplit, params: ModelParams, window: SimWindow,
                             size: int, rng: RngSeed) -> np.ndarray:
    """(size, N) interference samples from the shared-component construction."""
    gpos, gfad = rng.generator(_POSITIONS), rng.generator(_FADING)
    origin = np.zeros((1, 2))
    out = np.zeros((size, split.n))
    for m in range(split.n):
        for k in range(m, split.n):
            intensity = params.p * split.lam[m, k]
            if intensity <= 0.0:
                continue
            comp = _interference_batch(
                origin, intensity, params.alpha, params.epsilon, window, size, gpos, gfad
            )[:, 0]
            out[:, m] += comp
            if k != m:
                out[:, k] += comp
    return out


def sample_combination_model(split: IntensitySplit, params: ModelParams, window: SimWindow,
                             rng: RngSeed) -> np.ndarray:
    """One draw of the N combination-model interference values."""
    return sample_combination_batch(split, params, window, 1, rng)[0]


def _model_interference_batch(model: str, ps: PointSet, params: ModelParams, window: SimWindow,
                              size: int, rng: RngSeed,
                              weights: MixtureWeights | None,
                              split: IntensitySplit | None) -> np.ndarray:
    if model == "ppp":
        return _interference_batch(
            ps.coords(), params.intensity, params.alpha, params.epsilon, window, size,
            rng.generator(_POSITIONS), rng.generator(_FADING),
        )
    if model == "mixture":
        if weights is None:
            raise ValueError("the mixture model needs its weight matrix")
        if weights.n != len(ps):
            raise ValueError(f"{weights.n} weight rows for {len(ps)} points")
        return sample_mixture_batch(weights, params, window, size, rng)
    if model == "combination":
        if split is None:
            raise ValueError("the combination model needs its intensity split")
        if split.n != len(ps):
            raise ValueError(f"{split.n} split rows for {len(ps)} points")
        return sample_combination_batch(split, params, window, size, rng)
    raise ValueError(f"unknown model {model!r}; expected ppp, mixture or combination")


def sample_interference_and_sir(model: str, ps: PointSet, params: ModelParams, window: SimWindow,
                                size: int, rng: RngSeed,
                                weights: MixtureWeights | None = None,
                                split: IntensitySplit | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(interference, sir) sample matrices under the chosen interference model."""
    interference = _model_interference_batch(model, ps, params, window, size, rng, weights, split)
    coords = ps.coords()
    gains = 1.0 / (params.epsilon + np.hypot(coords[:, 0], coords[:, 1]) ** params.alpha)
    h = rng.generator(_SIGNAL).exponential(1.0, size=interference.shape)
    with np.errstate(divide="ignore"):
        sir = np.where(interference > 0.0,
                       h * gains / np.where(interference > 0, interference, 1.0), np.inf)
    return interference, sir


def sample_sir_batch(model: str, ps: PointSet, params: ModelParams, window: SimWindow,
                     size: int, rng: RngSeed,
                     weights: MixtureWeights | None = None,
                     split: IntensitySplit | None = None) -> np.ndarray:
    """(size, N) SIR samples under the chosen interference model."""
    return sample_interference_and_sir(model, ps, params, window, size, rng, weights, split)[1]


# ---------------------------------------------------------------------------
# Estimators


def ccdf_from_sir_samples(sir: np.ndarray, th: SirThresholds) -> MonteCarloEstimate:
    """Fraction of realizations clearing every per-point threshold, with Wilson CI."""
    hits = np.all(sir > th.y[None, :], axis=1)
    return _proportion_estimate(hits)


def estimate_joint_ccdf(model: str, ps: PointSet, th: SirThresholds, params: ModelParams,
                        window: SimWindow, n_samples: int, rng: RngSeed,
                        weights: MixtureWeights | None = None,
                        split: IntensitySplit | None = None) -> MonteCarloEstimate:
    """Monte-Carlo joint SIR CCDF under one of the three models."""
    if n_samples < 1000:
        raise ValueError("joint CCDF estimation needs at least 1000 samples")
    sir = sample_sir_batch(model, ps, params, window, n_samples, rng, weights, split)
    return ccdf_from_sir_samples(sir, th)


def estimate_joint_ccdf_grid(model: str, ps: PointSet, ths: Sequence[SirThresholds],
                             params: ModelParams, window: SimWindow, n_samples: int,
                             rng: RngSeed,
                             weights: MixtureWeights | None = None,
                             split: IntensitySplit | None = None) -> list[MonteCarloEstimate]:
    """CCDF estimates over a grid of threshold vectors from one shared sample batch."""
    sir = sample_sir_batch(model, ps, params, window, n_samples, rng, weights, split)
    return [ccdf_from_sir_samples(sir, th) for th in ths]


def _pearson_with_jackknife(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    n = x.size
    x = x - x.mean()
    y = y - y.mean()
    sx, sy = x.sum(), y.sum()
    sxx, syy, sxy = float(x @ x), float(y @ y), float(x @ y)
    vx = sxx - sx * sx / n
    vy = syy - sy * sy / n
    if vx <= 0.0 or vy <= 0.0:
        raise DegenerateSamples("zero-variance sample; correlation undefined")
    r = (sxy - sx * sy / n) / math.sqrt(vx * vy)
    m = n - 1
    lsx, lsy = sx - x, sy - y
    lvx = (sxx - x * x) - lsx**2 / m
    lvy = (syy - y * y) - lsy**2 / m
    lcov = (sxy - x * y) - lsx * lsy / m
    denom = lvx * lvy
    if np.any(denom <= 0.0):
        raise DegenerateSamples("leave-one-out variance collapsed; sample too degenerate")
    ri = lcov / np.sqrt(denom)
    var_jack = (n - 1) / n * float(np.sum((ri - ri.mean()) ** 2))
    return r, _Z95 * math.sqrt(var_jack)


def estimate_sir_correlation(model: str, ps: PointSet, params: ModelParams, window: SimWindow,
                             n_samples: int, rng: RngSeed,
                             weights: MixtureWeights | None = None,
                             split: IntensitySplit | None = None) -> CorrelationEstimate:
    """Pearson correlation of the SIRs at a pair of points, with jackknife CI.

    Realizations with an empty window (infinite SIR) are a truncation artifact
    and are dropped; the count is reported.
    """
    if len(ps) != 2:
        raise ValueError("SIR correlation is defined for exactly two points")
    if n_samples < 10_000:
        raise ValueError("SIR correlation estimation needs at least 10000 samples")
    sir = sample_sir_batch(model, ps, params, window, n_samples, rng, weights, split)
    finite = np.all(np.isfinite(sir), axis=1)
    kept = sir[finite]
    if kept.shape[0] < 3:
        raise DegenerateSamples("almost every realization was empty; enlarge the window or intensity")
    r, hw = _pearson_with_jackknife(kept[:, 0], kept[:, 1])
    return CorrelationEstimate(r, r - hw, r + hw, kept.shape[0], int(n_samples - kept.shape[0]))


def estimate_interference_correlation(model: str, ps: PointSet, params: ModelParams,
                                      window: SimWindow, n_samples: int, rng: RngSeed,
                                      weights: MixtureWeights | None = None,
                                      split: IntensitySplit | None = None) -> CorrelationEstimate:
    """Pearson correlation of the interference values at a pair of points."""
    if len(ps) != 2:
        raise ValueError("interference correlation is defined for exactly two points")
    interference = _model_interference_batch(model, ps, params, window, n_samples, rng, weights, split)
    r, hw = _pearson_with_jackknife(interference[:, 0], interference[:, 1])
    return CorrelationEstimate(r, r - hw, r + hw, n_samples, 0)


# ---------------------------------------------------------------------------
# Diversity-combining outage


def _mrc_field_statistic(ps: PointSet, params: ModelParams, window: SimWindow,
                         n_samples: int, rng: RngSeed, link_gain: float) -> np.ndarray:
    interference = _interference_batch(
        ps.coords(), params.intensity, params.alpha, params.epsilon, window, n_samples,
        rng.generator(_POSITIONS), rng.generator(_FADING),
    )
    h = rng.generator(_SIGNAL).exponential(1.0, size=interference.shape)
    with np.errstate(divide="ignore"):
        terms = np.where(interference > 0.0,
                         h * link_gain / np.where(interference > 0, interference, 1.0), np.inf)
    return terms.sum(axis=1)


def mrc_outage_ppp(cfg: MrcConfig, ps: PointSet, params: ModelParams, window: SimWindow,
                   n_samples: int, rng: RngSeed) -> MonteCarloEstimate:
    """Outage of a combining receiver over the shared field: P(sum of branch SIRs < T)."""
    if len(ps) != cfg.n_branches:
        raise ValueError(f"{len(ps)} branch points for {cfg.n_branches} branches")
    return mrc_outage_ppp_curve(ps, params, window, n_samples, rng,
                                cfg.link_distance, [cfg.threshold])[0]


def mixture_partition_weights(Q: MixtureWeights,
                              assignment_cap: int = DEFAULT_ASSIGNMENT_CAP) -> dict[tuple[int, ...], float]:
    """Total assignment weight per selector-collision pattern.

    The pattern is the sorted multiset of group sizes (how many branches share
    each interference variable); the inner outage probability depends on the
    assignment only through it.
    """
    if Q.n > assignment_cap:
        raise EnumerationCapExceeded(
            f"{Q.n} branches exceed the enumeration cap of {assignment_cap}")
    ones = SirThresholds(np.ones(Q.n), np.ones(Q.n))
    out: dict[tuple[int, ...], float] = {}
    for assignment in iter_assignments(Q, ones):
        sizes = tuple(sorted(int(round(s)) for s in assignment.s if s > 0))
        out[sizes] = out.get(sizes, 0.0) + assignment.weight
    return out


def mrc_outage_ppp_curve(ps: PointSet, params: ModelParams, window: SimWindow,
                         n_samples: int, rng: RngSeed, link_distance: float,
                         thresholds: Sequence[float]) -> list[MonteCarloEstimate]:
    """Field-simulation outage at several thresholds from one shared sample batch."""
    cfg = MrcConfig(len(ps), link_distance, float(max(thresholds, default=0.0)))
    if n_samples < 10_000:
        raise ValueError("outage estimation needs at least 10000 samples")
    stat = _mrc_field_statistic(ps, params, window, n_samples, rng, cfg.link_gain(params))
    return [_proportion_estimate(stat < t) for t in thresholds]


def mrc_outage_mixture(cfg: MrcConfig, Q: MixtureWeights, params: ModelParams,
                       window: SimWindow, n_samples: int, rng: RngSeed,
                       assignment_cap: int = DEFAULT_ASSIGNMENT_CAP) -> MonteCarloEstimate:
    """Outage under the mixture decomposition: exact outer weights, Monte-Carlo inner terms.

    Assignment weights are aggregated by collision pattern; each pattern's
    inner event reuses a common pool of interference and fading draws, so the
    weighted estimate is a mean of i.i.d. bounded per-sample aggregates and
    gets a normal-approximation CI.
    """
    if cfg.n_branches != Q.n:
        raise ValueError(f"{Q.n} weight rows for {cfg.n_branches} branches")
    return mrc_outage_mixture_curve(Q, params, window, n_samples, rng,
                                    cfg.link_distance, [cfg.threshold], assignment_cap)[0]


def mrc_outage_mixture_curve(Q: MixtureWeights, params: ModelParams, window: SimWindow,
                             n_samples: int, rng: RngSeed, link_distance: float,
                             thresholds: Sequence[float],
                             assignment_cap: int = DEFAULT_ASSIGNMENT_CAP) -> list[MonteCarloEstimate]:
    """Mixture-decomposition outage at several thresholds from shared pools."""
    if not Q.is_proper:
        raise InfeasibleWeights("the outage decomposition needs proper mixture weights")
    if n_samples < 10_000:
        raise ValueError("outage estimation needs at least 10000 samples")
    cfg = MrcConfig(Q.n, link_distance, float(max(thresholds, default=0.0)))
    patterns = mixture_partition_weights(Q, assignment_cap)
    gpos, gfad = rng.generator(_POSITIONS), rng.generator(_FADING)
    origin = np.zeros((1, 2))
    pool = np.empty((n_samples, Q.n))
    for k in range(Q.n):
        pool[:, k] = _interference_batch(
            origin, params.intensity, params.alpha, params.epsilon, window, n_samples, gpos, gfad
        )[:, 0]
    h = rng.generator(_SIGNAL).exponential(1.0, size=(n_samples, Q.n))
    link_gain = cfg.link_gain(params)

    stats = []
    for sizes, weight in patterns.items():
        stat = np.zeros(n_samples)
        offset = 0
        for g, k in enumerate(sizes):
            gamma = h[:, offset:offset + k].sum(axis=1)
            with np.errstate(divide="ignore"):
                stat += np.where(pool[:, g] > 0.0,
                                 gamma * link_gain / np.where(pool[:, g] > 0, pool[:, g], 1.0),
                                 np.inf)
            offset += k
        stats.append((weight, stat))

    out = []
    for t in thresholds:
        aggregate = np.zeros(n_samples)
        for weight, stat in stats:
            aggregate += weight * (stat < t)
        est = float(aggregate.mean())
        hw = _Z95 * float(aggregate.std(ddof=1)) / math.sqrt(n_samples)
        out.append(MonteCarloEstimate(est, max(0.0, est - hw), min(1.0, est + hw), n_samples))
    return out
