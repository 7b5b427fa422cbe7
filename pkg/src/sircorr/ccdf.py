"""Joint SIR CCDF at several observation points under three interference models.

The event is "SIR exceeds its threshold simultaneously at every point".  The
exact Poisson-field value needs one plane integral; the mixture model reduces
to a weighted enumeration of selector assignments with one Laplace-transform
factor per pooled threshold; the split model is a finite product of
Laplace-transform factors, one per shared and private component.

Thresholds are linear everywhere in the library; decibel conversion belongs
to the command-line boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import ModelParams, Point2, laplace_exponent
from .frameworks import IntensitySplit, MixtureWeights, PointSet
from .quadrature import QuadratureSpec, TailBound, integrate_r2

DEFAULT_ASSIGNMENT_CAP = 10


class EnumerationCapExceeded(ValueError):
    """Mixture enumeration would exceed the configured factorial-size cap."""


@dataclass(frozen=True, eq=False)
class SirThresholds:
    """Per-point SIR thresholds, raw and normalized by the reference-link gain."""

    y: np.ndarray
    y_hat: np.ndarray

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        y_hat = np.atleast_1d(np.asarray(self.y_hat, dtype=float))
        if y.shape != y_hat.shape or y.ndim != 1:
            raise ValueError("thresholds and normalized thresholds must be matching vectors")
        if np.any(y < 0) or np.any(~np.isfinite(y)):
            raise ValueError("thresholds must be finite and non-negative")
        if np.any((y == 0) != (y_hat == 0)):
            raise ValueError("a threshold is zero exactly when its normalized value is zero")
        y.flags.writeable = False
        y_hat.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "y_hat", y_hat)

    @property
    def n(self) -> int:
        return self.y.size


def normalize_thresholds(y, ps: PointSet, params: ModelParams) -> SirThresholds:
    """Scale thresholds by the inverse reference-link gain of each point.

    A scalar threshold is broadcast to every point.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        y = np.full(len(ps), float(y))
    if y.size != len(ps):
        raise ValueError(f"{y.size} thresholds for {len(ps)} points")
    if np.any(y < 0):
        raise ValueError("thresholds must be non-negative")
    dist = np.hypot(*ps.coords().T)
    return SirThresholds(y, y * (params.epsilon + dist**params.alpha))


@dataclass(frozen=True, eq=False)
class MixtureAssignment:
    """One selector outcome: per-point component choices, pooled thresholds, weight."""

    a: tuple[int, ...]
    s: np.ndarray
    weight: float


def iter_assignments(Q: MixtureWeights, th: SirThresholds) -> Iterator[MixtureAssignment]:
    """All selector assignments with their pooled thresholds and joint weights.

    Assignment component indices are 1-based and bounded by the point index;
    outcomes outside that triangle carry zero weight and are skipped.
    Zero-weight branches are pruned.
    """
    if th.n != Q.n:
        raise ValueError(f"{th.n} thresholds for {Q.n} mixture rows")
    n = Q.n
    q = Q.q
    y_hat = th.y_hat
    s = np.zeros(n)
    a: list[int] = []

    def descend(i: int, weight: float) -> Iterator[MixtureAssignment]:
        if i == n:
            yield MixtureAssignment(tuple(a), s.copy(), weight)
            return
        for k in range(i + 1):
            w = weight * q[i, k]
            if w == 0.0:
                continue
            a.append(k + 1)
            s[k] += y_hat[i]
            yield from descend(i + 1, w)
            s[k] -= y_hat[i]
            a.pop()

    yield from descend(0, 1.0)


def ppp_log_ccdf_integral(ps: PointSet, th: SirThresholds, params: ModelParams,
                          spec: QuadratureSpec) -> float:
    """Plane integral in the exact Poisson CCDF exponent.

    Does not depend on the interferer intensity, so sweeps over the intensity
    can reuse one integral per threshold vector.
    """
    params._require_unit_epsilon("the exact joint CCDF integrand")
    if th.n != len(ps):
        raise ValueError(f"{th.n} thresholds for {len(ps)} points")
    coords = ps.coords()
    y_hat = th.y_hat
    if np.all(y_hat == 0.0):
        return 0.0
    alpha = params.alpha
    center = coords.mean(axis=0)
    rho = float(np.max(np.hypot(coords[:, 0] - center[0], coords[:, 1] - center[1])))

    def integrand(x, y):
        prod = np.ones_like(np.asarray(x, dtype=float))
        for (zx, zy), yh in zip(coords, y_hat):
            if yh == 0.0:
                continue
            d2 = (x - zx) ** 2 + (y - zy) ** 2
            prod /= 1.0 + yh / (1.0 + d2 ** (alpha / 2.0))
        return 1.0 - prod

    # 1 - prod(1/(1+u_i)) <= sum(u_i) <= sum(y_hat) * (r/2)**-alpha past 2*rho.
    tail = TailBound(
        coefficient=2.0**alpha * float(y_hat.sum()),
        exponent=alpha,
        r_min=max(2.0 * rho, 2.0),
    )
    result = integrate_r2(integrand, Point2(*center), spec, tail=tail,
                          features=[Point2(*c) for c in coords])
    return result.value


def joint_ccdf_ppp(ps: PointSet, th: SirThresholds, params: ModelParams,
                   spec: QuadratureSpec) -> float:
    """Exact joint SIR CCDF under the shared Poisson field; the baseline model."""
    return math.exp(-params.intensity * ppp_log_ccdf_integral(ps, th, params, spec))


def joint_ccdf_mixture(Q: MixtureWeights, th: SirThresholds, params: ModelParams,
                       assignment_cap: int = DEFAULT_ASSIGNMENT_CAP) -> float:
    """Joint SIR CCDF under the selector-mixture model.

    Enumerates assignments in lexicographic order with compensated summation;
    Laplace factors are memoized per distinct pooled threshold.  The
    enumeration has factorial size, gated by ``assignment_cap`` points.
    """
    params._require_unit_epsilon("joint_ccdf_mixture")
    if Q.n > assignment_cap:
        raise EnumerationCapExceeded(
            f"{Q.n} points require {math.factorial(Q.n)} assignments; "
            f"cap is {assignment_cap} points ({math.factorial(assignment_cap)} assignments)"
        )
    intensity, alpha = params.intensity, params.alpha
    factor_memo: dict[float, float] = {0.0: 1.0}

    def lt_factor(s: float) -> float:
        got = factor_memo.get(s)
        if got is None:
            got = factor_memo[s] = math.exp(-laplace_exponent(s, intensity, alpha))
        return got

    total = 0.0
    comp = 0.0  # Kahan compensation
    for assignment in iter_assignments(Q, th):
        term = assignment.weight
        for s in assignment.s:
            if s > 0.0:
                term *= lt_factor(float(s))
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def joint_ccdf_combination(split: IntensitySplit, th: SirThresholds,
                           params: ModelParams) -> float:
    """Joint SIR CCDF under the intensity-split model: a closed-form product.

    One factor per shared component evaluated at the pair's summed normalized
    thresholds, and one per private component at its own threshold.
    """
    params._require_unit_epsilon("joint_ccdf_combination")
    if th.n != split.n:
        raise ValueError(f"{th.n} thresholds for {split.n} split rows")
    y_hat = th.y_hat
    exponent = 0.0
    for i in range(split.n):
        exponent += laplace_exponent(float(y_hat[i]), params.p * split.lam[i, i], params.alpha)
        for j in range(i + 1, split.n):
            exponent += laplace_exponent(
                float(y_hat[i] + y_hat[j]), params.p * split.lam[i, j], params.alpha
            )
    return math.exp(-exponent)
