"""Closed-form interference statistics for a Poisson field with bounded path loss.

All transmitters form a homogeneous Poisson point process; ALOHA thinning with
probability ``p`` leaves an interferer process of intensity ``lam * p``.
Channels carry unit-mean exponential (Rayleigh power) fading, and the path
gain between two points at distance ``d`` is ``1 / (epsilon + d**alpha)``.

The second-order quantities (pair overlap integral, correlation coefficient)
have no closed form for distinct points and are evaluated with the adaptive
plane integrator from :mod:`sircorr.quadrature`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import QuadratureSpec, TailBound, integrate_r2

# Mean square of unit-mean exponential fading power; pins the correlation
# ceiling for distinct points at 1/2.
FADING_MEAN_SQUARE = 2.0


@dataclass(frozen=True)
class Point2:
    """A point in the plane."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"coordinates must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


ORIGIN = Point2(0.0, 0.0)


@dataclass(frozen=True)
class ModelParams:
    """Field and channel parameters.

    lam      -- base transmitter intensity (points per unit area), > 0
    p        -- ALOHA transmit probability, in (0, 1]
    alpha    -- path-loss exponent, > 2 (all moments diverge otherwise)
    epsilon  -- path-loss offset, > 0; the shipped scenarios use 1
    """

    lam: float
    p: float
    alpha: float
    epsilon: float = 1.0

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be positive and finite, got {self.lam}")
        if not (0 < self.p <= 1):
            raise ValueError(f"p must be in (0, 1], got {self.p}")
        if not (self.alpha > 2 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must exceed 2, got {self.alpha}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive (bounded path loss), got {self.epsilon}")

    @property
    def intensity(self) -> float:
        """Effective interferer intensity ``lam * p``."""
        return self.lam * self.p

    def _require_unit_epsilon(self, what: str) -> None:
        if self.epsilon != 1.0:
            raise ValueError(f"{what} is only available for epsilon=1, got epsilon={self.epsilon}")


def path_loss(u: Point2, v: Point2, params: ModelParams) -> float:
    """Bounded path gain ``1 / (epsilon + ||u - v||**alpha)``, in (0, 1/epsilon]."""
    return 1.0 / (params.epsilon + u.distance_to(v) ** params.alpha)


def _sin_term(alpha: float) -> float:
    return alpha * math.sin(2.0 * math.pi / alpha)


def mean_for_intensity(intensity: float, alpha: float, epsilon: float = 1.0) -> float:
    """Mean aggregate interference for an interferer process of the given intensity."""
    if alpha <= 2:
        raise ValueError(f"alpha must exceed 2, got {alpha}")
    return 2.0 * math.pi**2 * intensity / (epsilon ** (1.0 - 2.0 / alpha) * _sin_term(alpha))


def variance_for_intensity(intensity: float, alpha: float, epsilon: float = 1.0) -> float:
    """Variance of aggregate interference for the given interferer intensity."""
    if alpha <= 2:
        raise ValueError(f"alpha must exceed 2, got {alpha}")
    return (
        2.0 * FADING_MEAN_SQUARE * math.pi**2 * intensity * (alpha - 2.0)
        / (epsilon ** (2.0 - 2.0 / alpha) * alpha * _sin_term(alpha))
    )


def interference_mean(params: ModelParams) -> float:
    """Mean of the interference at any observation point (stationary field)."""
    return mean_for_intensity(params.intensity, params.alpha, params.epsilon)


def interference_variance(params: ModelParams) -> float:
    """Variance of the interference at any observation point."""
    return variance_for_intensity(params.intensity, params.alpha, params.epsilon)


def laplace_exponent(s, intensity: float, alpha: float):
    """Exponent ``E`` such that ``E[exp(-s I)] = exp(-E)`` for epsilon=1.

    Accepts scalar or array ``s``; vectorized for sweep evaluation.
    """
    s = np.asarray(s, dtype=float)
    coef = 2.0 * math.pi**2 * intensity / _sin_term(alpha)
    out = coef * s / (1.0 + s) ** (1.0 - 2.0 / alpha)
    return out if out.ndim else float(out)


def laplace_for_intensity(s, intensity: float, alpha: float):
    """Laplace transform ``E[exp(-s I)]`` of the interference, epsilon=1 form."""
    return np.exp(-np.asarray(laplace_exponent(s, intensity, alpha)))[()]


def interference_laplace(s: float, params: ModelParams) -> float:
    """Laplace transform of the interference at a point; requires epsilon=1 and s >= 0."""
    params._require_unit_epsilon("interference_laplace")
    if s < 0:
        raise ValueError(f"Laplace argument must be non-negative, got {s}")
    return float(laplace_for_intensity(s, params.intensity, params.alpha))


def _pair_overlap_tail(alpha: float, rho: float) -> TailBound:
    # Each factor is below ||x - z||**-alpha; beyond r >= max(2*rho, 2) every
    # z sits within r/2 of the ring, so the product is below (r/2)**(-2*alpha).
    return TailBound(coefficient=4.0**alpha, exponent=2.0 * alpha, r_min=max(2.0 * rho, 2.0))


def overlap_integral(zi: Point2, zj: Point2, params: ModelParams, spec: QuadratureSpec) -> float:
    """Plane integral of the product of path gains seen from two observation points.

    Symmetric in its arguments and strictly decreasing in their separation.
    """
    alpha, eps = params.alpha, params.epsilon
    cx, cy = 0.5 * (zi.x + zj.x), 0.5 * (zi.y + zj.y)
    rho = 0.5 * zi.distance_to(zj)

    def integrand(x, y):
        d2i = (x - zi.x) ** 2 + (y - zi.y) ** 2
        d2j = (x - zj.x) ** 2 + (y - zj.y) ** 2
        return 1.0 / ((eps + d2i ** (alpha / 2.0)) * (eps + d2j ** (alpha / 2.0)))

    result = integrate_r2(
        integrand,
        Point2(cx, cy),
        spec,
        tail=_pair_overlap_tail(alpha, rho),
        features=(zi, zj),
    )
    return result.value


def correlation_denominator(params: ModelParams, spec: QuadratureSpec) -> float:
    """Normalizer of the pair correlation: fading mean square times the squared-gain integral.

    Computed by quadrature so that the closed-form variance identity
    ``denominator * lam * p == Var[I]`` is a genuine cross-check.
    """
    params._require_unit_epsilon("correlation_denominator")
    return FADING_MEAN_SQUARE * overlap_integral(ORIGIN, ORIGIN, params, spec)


def spatial_correlation(zi: Point2, zj: Point2, params: ModelParams, spec: QuadratureSpec) -> float:
    """Correlation coefficient of the interference at two points.

    Coincident points return exactly 1 by definition; distinct points take the
    overlap/normalizer ratio, which lives in (0, 1/2) and is independent of
    the interferer intensity.
    """
    params._require_unit_epsilon("spatial_correlation")
    if zi == zj:
        return 1.0
    return overlap_integral(zi, zj, params, spec) / correlation_denominator(params, spec)
