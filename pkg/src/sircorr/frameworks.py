"""Correlation frameworks for identically distributed interference variables.

Two constructions reproduce a target pairwise correlation matrix while
preserving the common marginal distribution:

* selector mixtures -- each observation point is assigned one of a pool of
  i.i.d. interference variables through a random selector; correlation between
  two points equals the probability their selectors collide.  Weights come
  from a sequence of lower-triangular linear systems solved by forward
  substitution.
* intensity splits -- each interference is the superposition of independent
  component fields, with exactly one component shared per pair; correlation
  equals the shared fraction of the total intensity.  Feasible only when each
  row of off-diagonal correlations sums to at most 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams, Point2, spatial_correlation, correlation_denominator, overlap_integral
from .quadrature import QuadratureSpec, QuadratureError

_ROW_SUM_TOL = 1e-12
_PIVOT_TOL = 1e-12


class InfeasibleWeights(ValueError):
    """The target correlations are not representable by a proper selector mixture."""


class InfeasibleSplit(ValueError):
    """The target correlations violate the intensity-split row budget."""


@dataclass(frozen=True)
class PointSet:
    """Ordered observation locations; order is authoritative for the mixture build."""

    points: tuple[Point2, ...]

    def __init__(self, points):
        pts = tuple(points)
        if len(pts) < 1:
            raise ValueError("a point set needs at least one point")
        for i in range(len(pts)):
            for j in range(i):
                if pts[i] == pts[j]:
                    raise ValueError(f"duplicate observation points at indices {j} and {i}: {pts[i]}")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def coords(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.points], dtype=float)

    @staticmethod
    def circle(n: int, radius: float) -> "PointSet":
        """n points at polar angles 2*pi*i/n, i = 1..n, on a circle around the origin."""
        if n < 1:
            raise ValueError("need at least one point")
        if radius <= 0:
            raise ValueError("circle radius must be positive")
        pts = [
            Point2(radius * math.cos(2.0 * math.pi * i / n), radius * math.sin(2.0 * math.pi * i / n))
            for i in range(1, n + 1)
        ]
        return PointSet(pts)


def _check_square(mat: np.ndarray, name: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
        raise ValueError(f"{name} must be a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError(f"{name} contains non-finite entries")
    return mat


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Symmetric pairwise correlation targets with unit diagonal."""

    zeta: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        zeta = _check_square(self.zeta, "correlation matrix")
        if not np.allclose(zeta, zeta.T, atol=1e-10, rtol=0.0):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(zeta), 1.0, atol=1e-10, rtol=0.0):
            raise ValueError("correlation matrix must have unit diagonal")
        off = zeta[~np.eye(zeta.shape[0], dtype=bool)]
        if off.size and (off.min() < 0.0 or off.max() > 1.0):
            raise ValueError("off-diagonal correlations must lie in [0, 1]")
        sym = 0.5 * (zeta + zeta.T)
        np.fill_diagonal(sym, 1.0)
        sym.flags.writeable = False
        object.__setattr__(self, "zeta", sym)
        object.__setattr__(self, "n", sym.shape[0])

    def to_json_dict(self) -> dict:
        return {"type": "correlation_matrix", "n": self.n, "zeta": self.zeta.ravel().tolist()}

    @staticmethod
    def from_json_dict(doc: dict) -> "CorrelationMatrix":
        n = int(doc["n"])
        return CorrelationMatrix(np.asarray(doc["zeta"], dtype=float).reshape(n, n))


@dataclass(frozen=True, eq=False)
class MixtureWeights:
    """Lower-triangular selector weights; row i is the PMF of the selector for point i.

    Constructed through :func:`solve_mixture_weights`.  Structural invariants
    (triangularity, unit row sums) always hold; entry non-negativity holds for
    proper mixtures and is deliberately not forced here so that the signed
    extension used by the analytic evaluators can be represented.  Check
    :attr:`is_proper` before sampling.
    """

    q: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        q = _check_square(self.q, "weight matrix")
        n = q.shape[0]
        if np.any(q[np.triu_indices(n, k=1)] != 0.0):
            raise ValueError("weight matrix must be lower-triangular")
        rows = q.sum(axis=1)
        if np.max(np.abs(rows - 1.0)) > _ROW_SUM_TOL:
            raise ValueError(f"weight rows must sum to 1, worst residual {np.max(np.abs(rows - 1.0)):.2e}")
        if abs(q[0, 0] - 1.0) > 1e-12:
            raise ValueError("the first selector must be deterministic")
        q = q.copy()
        q.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "n", n)

    @property
    def min_weight(self) -> float:
        return float(min(self.q[i, : i + 1].min() for i in range(self.n)))

    @property
    def is_proper(self) -> bool:
        """True when every row is a valid PMF (all weights non-negative)."""
        return self.min_weight >= -_ROW_SUM_TOL

    def row_pmf(self, i: int) -> np.ndarray:
        """PMF of selector i over components 1..i+1 (0-based support)."""
        if not self.is_proper:
            raise InfeasibleWeights("signed weights cannot be used as a sampling PMF")
        pmf = np.clip(self.q[i, : i + 1], 0.0, None)
        return pmf / pmf.sum()

    def to_json_dict(self) -> dict:
        return {"type": "mixture_weights", "n": self.n, "q": self.q.ravel().tolist()}

    @staticmethod
    def from_json_dict(doc: dict) -> "MixtureWeights":
        n = int(doc["n"])
        return MixtureWeights(np.asarray(doc["q"], dtype=float).reshape(n, n))


@dataclass(frozen=True, eq=False)
class IntensitySplit:
    """Symmetric component intensities for the shared-field construction.

    Entry (m, n) with m != n is the intensity of the component shared by
    points m and n; the diagonal holds each point's private remainder.  Rows
    sum to the total intensity, which keeps every superposition a Poisson
    field of the original intensity.  Entries are base intensities; multiply
    by the ALOHA probability where a thinned field is needed.
    """

    lam: np.ndarray
    total_intensity: float
    n: int = field(init=False)

    def __post_init__(self):
        lam = _check_square(self.lam, "intensity split")
        if not (self.total_intensity > 0):
            raise ValueError("total intensity must be positive")
        if not np.allclose(lam, lam.T, atol=1e-10 * self.total_intensity, rtol=0.0):
            raise ValueError("intensity split must be symmetric")
        if lam.min() < -_ROW_SUM_TOL * self.total_intensity:
            raise InfeasibleSplit(
                f"negative component intensity {lam.min():.3e}; "
                "the correlation row budget is violated"
            )
        rows = lam.sum(axis=1)
        if np.max(np.abs(rows - self.total_intensity)) > 1e-9 * self.total_intensity:
            raise ValueError("each row of the split must sum to the total intensity")
        lam = np.clip(lam, 0.0, None)
        lam.flags.writeable = False
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "n", lam.shape[0])

    def to_json_dict(self) -> dict:
        return {
            "type": "intensity_split",
            "n": self.n,
            "total_intensity": self.total_intensity,
            "lam": self.lam.ravel().tolist(),
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "IntensitySplit":
        n = int(doc["n"])
        return IntensitySplit(
            np.asarray(doc["lam"], dtype=float).reshape(n, n), float(doc["total_intensity"])
        )


def to_json(obj) -> str:
    return json.dumps(obj.to_json_dict(), indent=2, sort_keys=True)


def from_json(text: str):
    doc = json.loads(text)
    kinds = {
        "correlation_matrix": CorrelationMatrix.from_json_dict,
        "mixture_weights": MixtureWeights.from_json_dict,
        "intensity_split": IntensitySplit.from_json_dict,
    }
    try:
        loader = kinds[doc["type"]]
    except KeyError as exc:
        raise ValueError(f"unknown or missing matrix document type: {doc.get('type')!r}") from exc
    return loader(doc)


def build_correlation_matrix(ps: PointSet, params: ModelParams, spec: QuadratureSpec) -> CorrelationMatrix:
    """Pairwise interference correlations for a point set.

    The normalizer is integrated once; each distinct pair costs one plane
    integral.  A quadrature failure is re-raised with the offending pair
    identified.
    """
    n = len(ps)
    zeta = np.eye(n)
    if n > 1:
        den = correlation_denominator(params, spec)
        for i in range(n):
            for j in range(i):
                try:
                    zeta[i, j] = zeta[j, i] = (
                        overlap_integral(ps.points[i], ps.points[j], params, spec) / den
                    )
                except QuadratureError as exc:
                    raise QuadratureError(
                        f"correlation quadrature failed for point pair ({j}, {i}): {exc}"
                    ) from exc
    return CorrelationMatrix(zeta)


def solve_mixture_weights(Z: CorrelationMatrix, *, allow_signed: bool = False) -> MixtureWeights:
    """Selector weights matching the target correlations.

    Row i is found by forward substitution against the previously solved rows,
    in increasing order of i, so the result depends on the point ordering.
    The solution reproduces every target correlation exactly (in exact
    arithmetic) through the collision probabilities of independent selectors.

    Negative entries mean the targets are not representable as proper PMFs;
    that raises :class:`InfeasibleWeights` unless ``allow_signed`` is set, in
    which case the signed algebraic solution is returned for use by the
    analytic evaluators (never for sampling).
    """
    zeta = Z.zeta
    n = Z.n
    q = np.zeros((n, n))
    q[0, 0] = 1.0
    bad: list[str] = []
    for i in range(1, n):
        for m in range(i):
            pivot = q[m, m]
            if abs(pivot) <= _PIVOT_TOL:
                raise InfeasibleWeights(
                    f"zero pivot weight at row {m}: the selector there is fully "
                    "determined by earlier components, so later correlations to it are fixed"
                )
            q[i, m] = (zeta[i, m] - float(q[m, :m] @ q[i, :m])) / pivot
            if q[i, m] < 0.0:
                bad.append(f"q[{i},{m}]={q[i, m]:.6g}")
        q[i, i] = 1.0 - q[i, :i].sum()
        if q[i, i] < 0.0:
            bad.append(f"q[{i},{i}]={q[i, i]:.6g}")
    if bad and not allow_signed:
        raise InfeasibleWeights(
            "target correlations are not mixture-representable; negative weights: " + ", ".join(bad)
        )
    return MixtureWeights(q)


def mixture_implied_correlation(Q: MixtureWeights) -> CorrelationMatrix:
    """Correlation matrix induced by a weight matrix: selector collision probabilities."""
    zeta = Q.q @ Q.q.T
    np.fill_diagonal(zeta, 1.0)
    return CorrelationMatrix(zeta)


def check_combination_feasibility(Z: CorrelationMatrix) -> np.ndarray:
    """Per-row slack of the intensity-split budget; feasible iff all entries >= 0."""
    return 1.0 - (Z.zeta.sum(axis=1) - 1.0)


def build_intensity_split(Z: CorrelationMatrix, params: ModelParams) -> IntensitySplit:
    """Intensity split matching the target correlations.

    Shared components get ``lam * zeta_ij``; the diagonal keeps whatever
    intensity remains on each row.  Raises :class:`InfeasibleSplit` when a
    remainder would be negative.
    """
    margins = check_combination_feasibility(Z)
    if margins.min() < -_ROW_SUM_TOL:
        worst = int(np.argmin(margins))
        raise InfeasibleSplit(
            f"correlation row {worst} exceeds the intensity budget by {-margins[worst]:.6g} "
            f"(row sums of off-diagonal correlations must stay at or below 1)"
        )
    lam = params.lam * Z.zeta.copy()
    np.fill_diagonal(lam, params.lam * np.clip(margins, 0.0, None))
    return IntensitySplit(lam, params.lam)
