"""Worst-case kernel size, Chebyshev centers and the worst-case optimal decoder.

The optimal decoder maps each measurement y to the Chebyshev centers of its
feasible set F_y, i.e. the minimizers of z -> max_{x in F_y} d(x, z). In
Euclidean space that is the center of the minimum enclosing ball, computed
exactly by Welzl's algorithm. Other metrics minimize over a finite candidate
set and report every near-tied minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .decoder import PointT, SetValuedDecoder
from .measure import residual
from .metrics import MetricError, MetricSpace, TABLE, as_point_set, diameter, pairwise
from .problem import Group, MeasurementTable, Problem, build_measurement_table, map_groups

MEB_EUCLIDEAN = "meb_euclidean"
CANDIDATE_ARGMIN = "candidate_argmin"

EUCLIDEAN_MEB = "euclidean_meb"
FEASIBLE_POINTS = "feasible_points"
FEASIBLE_PLUS_GRID = "feasible_plus_grid"
TABLE_POINTS = "table_points"
POLICIES = (EUCLIDEAN_MEB, FEASIBLE_POINTS, FEASIBLE_PLUS_GRID, TABLE_POINTS)

DEFAULT_TIE_TOL = 1e-9


@dataclass(frozen=True)
class ChebyshevResult:
    centers: Tuple[PointT, ...]
    radius: float
    solver: str
    tie_tol: float = DEFAULT_TIE_TOL

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.centers[0])


def _ball_through(support: List[np.ndarray]) -> Tuple[np.ndarray, float]:
    """Smallest ball with every support point on its boundary (circumball in the affine hull)."""
    p0 = support[0]
    if len(support) == 1:
        return p0.copy(), 0.0
    V = np.array([s - p0 for s in support[1:]])
    G = V @ V.T
    b = 0.5 * np.einsum("ij,ij->i", V, V)
    try:
        lam = np.linalg.solve(G, b)
    except np.linalg.LinAlgError:
        lam = np.linalg.lstsq(G, b, rcond=None)[0]
    c = p0 + lam @ V
    r2 = max(float(np.dot(c - s, c - s)) for s in support)
    return c, r2


def _outside(p: np.ndarray, c: np.ndarray, r2: float) -> bool:
    d = p - c
    return float(np.dot(d, d)) > r2 * (1.0 + 1e-12) + 1e-30


def _mtf(pts: list, end: int, support: list, dim: int):
    # move-to-front Welzl; recursion depth is bounded by dim + 1
    if support:
        c, r2 = _ball_through(support)
    else:
        c, r2 = None, -1.0
    if len(support) == dim + 1:
        return c, r2
    i = 0
    while i < end:
        p = pts[i]
        if c is None or _outside(p, c, r2):
            c, r2 = _mtf(pts, i, support + [p], dim)
            pts.insert(0, pts.pop(i))
        i += 1
    return c, r2


def minimum_enclosing_ball(points) -> Tuple[np.ndarray, float]:
    """Exact center and radius of the smallest Euclidean ball containing ``points``."""
    P = as_point_set(points)
    uniq = np.unique(P, axis=0)
    if len(uniq) == 1:
        return uniq[0].copy(), 0.0
    pts = [row.copy() for row in uniq]
    c, _ = _mtf(pts, len(pts), [], P.shape[1])
    radius = float(np.sqrt(np.max(np.sum((P - c) ** 2, axis=1))))
    return c, radius


def meb_core_set(points, tol: float = 1e-9, max_iter: int = 10**6) -> Tuple[np.ndarray, float]:
    """Badoiu-Clarkson iteration c <- c + (farthest - c) / (k + 1).

    Approximate; converges like O(1/sqrt(k)) in the worst case. Kept as a
    cross-check for :func:`minimum_enclosing_ball`.
    """
    P = as_point_set(points)
    c = P[0].copy()
    for k in range(1, max_iter + 1):
        d2 = np.sum((P - c) ** 2, axis=1)
        step = (P[int(np.argmax(d2))] - c) / (k + 1)
        c += step
        if np.linalg.norm(step) < tol:
            break
    return c, float(np.sqrt(np.max(np.sum((P - c) ** 2, axis=1))))


def chebyshev_center_euclidean(points, tol: float = DEFAULT_TIE_TOL,
                               metric: Optional[MetricSpace] = None) -> ChebyshevResult:
    if metric is not None and not metric.is_euclidean:
        raise MetricError(f"euclidean MEB solver cannot serve a {metric.kind} metric")
    c, r = minimum_enclosing_ball(points)
    return ChebyshevResult((tuple(float(v) for v in c),), r, MEB_EUCLIDEAN, tol)


def chebyshev_center_candidates(m: MetricSpace, feasible, candidates,
                                tie_tol: float = DEFAULT_TIE_TOL) -> ChebyshevResult:
    """Minimize z -> max_x d(x, z) over ``candidates``; return every tie within ``tie_tol``."""
    if candidates is None or len(candidates) == 0:
        raise MetricError("candidate set must be non-empty")
    if feasible is None or len(feasible) == 0:
        raise MetricError("feasible set must be non-empty")
    f = pairwise(m, candidates, feasible).max(axis=1)
    best = float(f.min())
    C = np.asarray(candidates, dtype=float)
    if C.ndim == 1:
        C = C.reshape(-1, 1)
    picked = sorted({tuple(float(v) for v in C[i]) for i in np.flatnonzero(f <= best + tie_tol)})
    return ChebyshevResult(tuple(picked), best, CANDIDATE_ARGMIN, tie_tol)


@dataclass(frozen=True)
class CandidatePolicy:
    """How Chebyshev-type minimizers are searched.

    ``euclidean_meb`` solves exactly in Euclidean space. The other kinds search
    a finite candidate set: the feasible points, the feasible points plus a
    regular grid over their bounding box (``grid_step``), or every point
    declared by a table metric. ``extra`` candidates are always added.
    """

    kind: str = EUCLIDEAN_MEB
    grid_step: Optional[float] = None
    extra: Optional[tuple] = None
    max_grid_points: int = 250_000
    tie_tol: float = DEFAULT_TIE_TOL

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ValueError(f"unknown candidate policy {self.kind!r}")
        if self.kind == FEASIBLE_PLUS_GRID and not (self.grid_step and self.grid_step > 0):
            raise ValueError("feasible_plus_grid needs a positive grid_step")

    @classmethod
    def default_for(cls, m: MetricSpace) -> "CandidatePolicy":
        if m.is_euclidean:
            return cls(EUCLIDEAN_MEB)
        if m.kind == TABLE:
            return cls(TABLE_POINTS)
        return cls(FEASIBLE_POINTS)

    def validate(self, m: MetricSpace) -> None:
        if self.kind == EUCLIDEAN_MEB and not m.is_euclidean:
            raise MetricError(f"euclidean_meb policy requested on a {m.kind} metric")
        if self.kind == TABLE_POINTS and m.kind != TABLE:
            raise MetricError("table_points policy needs a table metric")
        if self.kind == FEASIBLE_PLUS_GRID and m.kind == TABLE:
            raise MetricError("grid candidates are not available for table metrics")

    @property
    def is_exact(self) -> bool:
        """True when the minimization runs over the whole space X."""
        return self.kind in (EUCLIDEAN_MEB, TABLE_POINTS)

    def candidates(self, m: MetricSpace, feasible: np.ndarray) -> np.ndarray:
        parts = [feasible]
        if self.kind == TABLE_POINTS:
            parts = [m.table_points]
        elif self.kind == FEASIBLE_PLUS_GRID:
            parts.append(grid_over(feasible, self.grid_step, self.max_grid_points))
        if self.extra:
            parts.append(np.asarray(self.extra, dtype=float).reshape(-1, feasible.shape[1]))
        return np.unique(np.vstack(parts), axis=0)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.grid_step is not None:
            out["grid_step"] = self.grid_step
        return out


def grid_over(points: np.ndarray, step: float, max_points: int = 250_000) -> np.ndarray:
    """Regular grid lo + k * step covering the bounding box of ``points``.

    For the supported coordinatewise metrics, clamping a candidate into the
    box never increases its distance to any point inside the box, so the box
    is enough.
    """
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    counts = np.floor((hi - lo) / step + 1e-9).astype(int) + 1
    total = int(np.prod(counts.astype(float)))
    if total > max_points:
        raise ValueError(f"grid would have {total} points (limit {max_points}); increase the step")
    axes = [lo[d] + step * np.arange(counts[d]) for d in range(points.shape[1])]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def chebyshev_for_points(m: MetricSpace, feasible: np.ndarray,
                         policy: CandidatePolicy) -> ChebyshevResult:
    if len(np.unique(feasible, axis=0)) == 1:
        solver = MEB_EUCLIDEAN if policy.kind == EUCLIDEAN_MEB else CANDIDATE_ARGMIN
        return ChebyshevResult((tuple(float(v) for v in feasible[0]),), 0.0, solver,
                               policy.tie_tol)
    if policy.kind == EUCLIDEAN_MEB:
        return chebyshev_center_euclidean(feasible, policy.tie_tol, m)
    return chebyshev_center_candidates(m, feasible, policy.candidates(m, feasible),
                                       policy.tie_tol)


def kersize_worst(p: Problem, t: MeasurementTable) -> float:
    """Largest diameter of a feasible set."""
    return max(diameter(p.metric_x, t.feasible_points(g)) for g in t.groups)


def _resolve(p: Problem, policy) -> CandidatePolicy:
    if policy is None:
        policy = CandidatePolicy.default_for(p.metric_x)
    elif isinstance(policy, str):
        policy = CandidatePolicy(policy)
    policy.validate(p.metric_x)
    return policy


def worst_case_centers(p: Problem, t: MeasurementTable, policy=None,
                       threads: int = 1) -> List[ChebyshevResult]:
    policy = _resolve(p, policy)
    return map_groups(
        lambda g: chebyshev_for_points(p.metric_x, t.feasible_points(g), policy),
        t.groups, threads,
    )


def optimal_decoder_worst(p: Problem, t: MeasurementTable, policy=None,
                          threads: int = 1) -> SetValuedDecoder:
    results = worst_case_centers(p, t, policy, threads)
    return SetValuedDecoder({g.key: r.centers for g, r in zip(t.groups, results)},
                            name="optimal_worst")


def worst_case_error(p: Problem, t: MeasurementTable, dec: SetValuedDecoder) -> float:
    """sup over (x, e) of d^H(x, dec(F(x, e))); every output point is charged."""
    return float(residual(p, t, dec).max())


@dataclass(frozen=True)
class WorstGroupRow:
    key: tuple
    members: int
    feasible: int
    diameter: float
    radius: float
    centers: Tuple[PointT, ...]
    solver: str


@dataclass(frozen=True)
class WorstCaseReport:
    kersize: float
    error: float
    lower_ok: bool
    upper_ok: Optional[bool]
    policy: dict
    rows: Tuple[WorstGroupRow, ...] = field(default=())
    lower_tol: float = 1e-9
    upper_tol: float = 1e-6

    @property
    def verdicts(self) -> dict:
        return {"lower": self.lower_ok, "upper": self.upper_ok}

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok is not False

    def to_dict(self) -> dict:
        return {
            "kersize": self.kersize,
            "error": self.error,
            "policy": self.policy,
            "verdicts": {"kersize_half_le_error": self.lower_ok,
                         "error_le_kersize": self.upper_ok},
            "tolerances": {"lower": self.lower_tol, "upper": self.upper_tol},
            "groups": [
                {"key": list(r.key), "members": r.members, "feasible": r.feasible,
                 "diameter": r.diameter, "radius": r.radius,
                 "centers": [list(c) for c in r.centers], "solver": r.solver}
                for r in self.rows
            ],
        }


def worst_case_report(p: Problem, policy=None, table: Optional[MeasurementTable] = None,
                      threads: int = 1, lower_tol: float = 1e-9,
                      upper_tol: float = 1e-6) -> WorstCaseReport:
    t = table if table is not None else build_measurement_table(p)
    policy = _resolve(p, policy)
    results = worst_case_centers(p, t, policy, threads)
    dec = SetValuedDecoder({g.key: r.centers for g, r in zip(t.groups, results)})
    rows = []
    for g, r in zip(t.groups, results):
        rows.append(WorstGroupRow(g.key, len(g.members), len(g.x_indices),
                                  diameter(p.metric_x, t.feasible_points(g)),
                                  r.radius, r.centers, r.solver))
    kersize = max(r.diameter for r in rows)
    err = worst_case_error(p, t, dec)
    lower_ok = kersize / 2 - lower_tol <= err
    # every candidate set contains F_y, so the radius never exceeds the diameter
    upper_ok = err <= kersize + upper_tol
    return WorstCaseReport(kersize, err, bool(lower_ok), bool(upper_ok), policy.to_dict(),
                           tuple(rows), lower_tol, upper_tol)
