"""Metric spaces on finite point sets and the set distances built on them.

Points are real coordinate vectors. Complex vectors enter through
:func:`complex_to_real`, which interleaves real and imaginary parts so that the
Euclidean metric on the embedding equals the complex modulus metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Optional, Sequence

import numpy as np

EUCLIDEAN = "euclidean"
WEIGHTED_LP = "weighted_lp"
TABLE = "table"


class MetricError(ValueError):
    """Raised for dimension mismatches, bad table indices and malformed metrics."""


def as_point(coords, dim: Optional[int] = None) -> np.ndarray:
    a = np.asarray(coords, dtype=float).reshape(-1)
    if a.size == 0:
        raise MetricError("point must have dimension >= 1")
    if not np.all(np.isfinite(a)):
        raise MetricError(f"point has non-finite entries: {a.tolist()}")
    if dim is not None and a.size != dim:
        raise MetricError(f"dimension mismatch: expected {dim}, got {a.size}")
    return a


def as_point_set(points, dim: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise MetricError("point set must be a non-empty list of points")
    if not np.all(np.isfinite(arr)):
        raise MetricError("point set has non-finite entries")
    if dim is not None and arr.shape[1] != dim:
        raise MetricError(f"dimension mismatch: expected {dim}, got {arr.shape[1]}")
    return arr


def complex_to_real(z) -> np.ndarray:
    """Embed a complex vector into R^{2N} as (Re z_0, Im z_0, Re z_1, ...)."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def real_to_complex(a) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.size % 2:
        raise MetricError("real embedding of a complex vector needs even length")
    return a[0::2] + 1j * a[1::2]


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """A distance on real coordinate vectors.

    ``kind`` is one of ``euclidean``, ``weighted_lp`` (with ``exponent`` q >= 1
    and positive per-coordinate ``weights``) or ``table``. A table metric
    declares an indexed point list and an explicit symmetric distance matrix;
    points are looked up by exact coordinate equality (or given as integer
    indices).
    """

    kind: str = EUCLIDEAN
    dimension: Optional[int] = None
    exponent: float = 2.0
    weights: Optional[np.ndarray] = None
    table_points: Optional[np.ndarray] = None
    table: Optional[np.ndarray] = None
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == EUCLIDEAN:
            if self.dimension is not None and self.dimension < 1:
                raise MetricError("dimension must be positive")
        elif self.kind == WEIGHTED_LP:
            if not self.exponent >= 1 or not np.isfinite(self.exponent):
                raise MetricError("weighted_lp exponent must be a finite q >= 1")
            if self.weights is None:
                raise MetricError("weighted_lp needs per-coordinate weights")
            w = np.asarray(self.weights, dtype=float).reshape(-1)
            if np.any(~np.isfinite(w)) or np.any(w <= 0):
                raise MetricError("weighted_lp weights must be finite and > 0")
            if self.dimension is not None and self.dimension != w.size:
                raise MetricError("weights length must equal dimension")
            object.__setattr__(self, "weights", w)
            object.__setattr__(self, "dimension", w.size)
        elif self.kind == TABLE:
            if self.table is None or self.table_points is None:
                raise MetricError("table metric needs points and a distance matrix")
            d = np.asarray(self.table, dtype=float)
            pts = as_point_set(self.table_points)
            n = pts.shape[0]
            if d.shape != (n, n):
                raise MetricError(f"table matrix must be {n}x{n}, got {d.shape}")
            if np.any(~np.isfinite(d)) or np.any(d < 0):
                raise MetricError("table distances must be finite and nonnegative")
            object.__setattr__(self, "table", d)
            object.__setattr__(self, "table_points", pts)
            object.__setattr__(self, "dimension", None)
            index = {}
            for i, p in enumerate(pts):
                key = tuple(p.tolist())
                if key in index:
                    raise MetricError(f"table point {i} duplicates point {index[key]}")
                index[key] = i
            object.__setattr__(self, "_index", index)
            verdict = check_metric_axioms(self, range(n))
            if not verdict:
                raise MetricError(
                    f"table violates the {verdict.axiom} axiom at indices {verdict.triple}"
                )
        else:
            raise MetricError(f"unknown metric kind {self.kind!r}")

    @classmethod
    def euclidean(cls, dimension: Optional[int] = None) -> "MetricSpace":
        return cls(EUCLIDEAN, dimension=dimension)

    @classmethod
    def weighted_lp(cls, exponent: float, weights: Sequence[float]) -> "MetricSpace":
        return cls(WEIGHTED_LP, exponent=float(exponent), weights=np.asarray(weights, float))

    @classmethod
    def from_table(cls, points, matrix) -> "MetricSpace":
        return cls(TABLE, table_points=np.asarray(points, float), table=np.asarray(matrix, float))

    @classmethod
    def unchecked_table(cls, points, matrix) -> "MetricSpace":
        """Table metric built without the exhaustive axiom check (for diagnostics)."""
        obj = object.__new__(cls)
        pts = as_point_set(points)
        for name, value in [("kind", TABLE), ("dimension", None), ("exponent", 2.0),
                            ("weights", None), ("table_points", pts),
                            ("table", np.asarray(matrix, float)),
                            ("_index", {tuple(p.tolist()): i for i, p in enumerate(pts)})]:
            object.__setattr__(obj, name, value)
        return obj

    @property
    def is_euclidean(self) -> bool:
        return self.kind == EUCLIDEAN

    def table_index(self, a) -> int:
        if self.kind != TABLE:
            raise MetricError("table_index only applies to table metrics")
        if isinstance(a, (int, np.integer)):
            idx = int(a)
            if not 0 <= idx < len(self.table_points):
                raise MetricError(f"table index {idx} out of range")
            return idx
        key = tuple(as_point(a).tolist())
        try:
            return self._index[key]
        except KeyError:
            raise MetricError(f"point {list(key)} is not in the table's point list") from None

    def check_dimension(self, dim: int) -> None:
        if self.kind == TABLE:
            if dim != self.table_points.shape[1]:
                raise MetricError(
                    f"dimension mismatch: table points have dimension "
                    f"{self.table_points.shape[1]}, got {dim}"
                )
        elif self.dimension is not None and dim != self.dimension:
            raise MetricError(f"dimension mismatch: expected {self.dimension}, got {dim}")

    def to_dict(self) -> dict:
        if self.kind == EUCLIDEAN:
            return {"kind": EUCLIDEAN}
        if self.kind == WEIGHTED_LP:
            return {"kind": WEIGHTED_LP, "exponent": self.exponent,
                    "weights": self.weights.tolist()}
        return {"kind": TABLE, "points": self.table_points.tolist(),
                "matrix": self.table.tolist()}


def pairwise(m: MetricSpace, A, B) -> np.ndarray:
    """Matrix of distances d(A[i], B[j]).

    Every other distance routine funnels through here so that all quantities
    agree to the last bit. Coordinate differences are taken elementwise, which
    keeps the result exactly symmetric.
    """
    if m.kind == TABLE:
        ia = np.array([m.table_index(a) for a in A], dtype=int)
        ib = np.array([m.table_index(b) for b in B], dtype=int)
        return m.table[np.ix_(ia, ib)]
    A = as_point_set(A)
    B = as_point_set(B)
    if A.shape[1] != B.shape[1]:
        raise MetricError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    m.check_dimension(A.shape[1])
    diff = np.abs(A[:, None, :] - B[None, :, :])
    if m.kind == EUCLIDEAN:
        return np.sqrt(np.sum(diff * diff, axis=-1))
    q = m.exponent
    if q == 1.0:
        return np.sum(m.weights * diff, axis=-1)
    return np.sum(m.weights * diff**q, axis=-1) ** (1.0 / q)


def dist(m: MetricSpace, a, b) -> float:
    if m.kind == TABLE:
        return float(m.table[m.table_index(a), m.table_index(b)])
    return float(pairwise(m, [as_point(a)], [as_point(b)])[0, 0])


def _nonempty(A, what: str):
    if A is None or len(A) == 0:
        raise MetricError(f"{what} must be non-empty")
    return A


def diameter(m: MetricSpace, A) -> float:
    _nonempty(A, "set")
    return float(pairwise(m, A, A).max())


def hausdorff_set_set(m: MetricSpace, A, B) -> float:
    """Hausdorff distance: the larger of the two directed sup-inf distances."""
    _nonempty(A, "first set")
    _nonempty(B, "second set")
    d = pairwise(m, A, B)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def hausdorff_point_set(m: MetricSpace, a, B) -> float:
    """d^H({a}, B) = sup over b in B of d(a, b).

    This is not the usual point-to-set distance; see :func:`dist_point_set`.
    """
    _nonempty(B, "set")
    return float(pairwise(m, [a], B).max())


def dist_point_set(m: MetricSpace, a, B) -> float:
    _nonempty(B, "set")
    return float(pairwise(m, [a], B).min())


@dataclass(frozen=True)
class AxiomVerdict:
    ok: bool
    axiom: Optional[str] = None
    triple: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.ok


def check_metric_axioms(m: MetricSpace, sample: Iterable, atol: float = 0.0) -> AxiomVerdict:
    """Exhaustively check identity, symmetry and triangle inequality on ``sample``.

    Returns the first violating triple (sample indices, lexicographic order)
    with the name of the broken axiom. For table metrics the sample may be
    integer indices.
    """
    pts = list(sample)
    if not pts:
        raise MetricError("sample must be non-empty")
    D = pairwise(m, pts, pts)
    if m.kind == TABLE:
        ids = np.array([m.table_index(p) for p in pts])
        same = ids[:, None] == ids[None, :]
    else:
        P = as_point_set(pts)
        same = np.all(P[:, None, :] == P[None, :, :], axis=-1)
    bad = np.argwhere((same & (D != 0)) | (~same & (D <= 0)))
    if bad.size:
        i, j = bad[0]
        return AxiomVerdict(False, "identity", (int(i), int(j), int(j)))
    bad = np.argwhere(D != D.T)
    if bad.size:
        i, j = bad[0]
        return AxiomVerdict(False, "symmetry", (int(i), int(j), int(i)))
    # D[i, k] <= D[i, j] + D[j, k], indexed [i, j, k]
    bad = np.argwhere(D[:, None, :] > D[:, :, None] + D[None, :, :] + atol)
    if bad.size:
        i, j, k = bad[0]
        return AxiomVerdict(False, "triangle", (int(i), int(j), int(k)))
    return AxiomVerdict(True)
