"""Inverse problems (F, M1, E) on finite classes and their measurement groups.

A :class:`Problem` enumerates every pair (x, e) of the model and noise classes.
:func:`build_measurement_table` partitions those pairs by the measurement they
produce. Each group corresponds to one y in M2^E, and the x-projection of a
group is the feasible set F_y.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .metrics import MetricError, MetricSpace, as_point, as_point_set

LINEAR_ADDITIVE = "linear_additive"
LINEAR_MULTIPLICATIVE = "linear_multiplicative"
MIXED = "mixed"
TABLE = "table"
FORWARD_KINDS = (LINEAR_ADDITIVE, LINEAR_MULTIPLICATIVE, MIXED, TABLE)

DEFAULT_GROUPING_TOL = 1e-9

Key = Tuple[int, ...]
Atom = Tuple[int, int]


class ProblemError(ValueError):
    pass


def _point_array(points, what: str) -> np.ndarray:
    try:
        return as_point_set(points)
    except MetricError as exc:
        raise ProblemError(f"{what}: {exc}") from None


@dataclass(frozen=True, eq=False)
class ModelClass:
    points: np.ndarray

    def __post_init__(self):
        pts = _point_array(self.points, "model class")
        seen: Dict[tuple, int] = {}
        for i, p in enumerate(pts):
            key = tuple(p.tolist())
            if key in seen:
                raise ProblemError(
                    f"model class point {i} duplicates point {seen[key]}: {list(key)}"
                )
            seen[key] = i
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class NoiseClass:
    points: np.ndarray

    def __post_init__(self):
        pts = _point_array(self.points, "noise class")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def noiseless(cls, dim: int) -> "NoiseClass":
        return cls(np.zeros((1, dim)))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class ForwardModel:
    """Forward map F(x, e).

    ``linear_additive`` gives Ax + e, ``linear_multiplicative`` gives Ax * e
    (componentwise) and ``mixed`` gives Ax * e1 + e2, where e1 is the first
    ``split`` noise coordinates and e2 the rest. A ``table`` model maps
    (x-index, e-index) pairs to explicit measurement points.
    """

    kind: str
    matrix: Optional[np.ndarray] = None
    split: Optional[int] = None
    table: Optional[Dict[Atom, np.ndarray]] = None

    def __post_init__(self):
        if self.kind not in FORWARD_KINDS:
            raise ProblemError(f"unknown forward kind {self.kind!r}")
        if self.kind == TABLE:
            if not self.table:
                raise ProblemError("table forward model needs a non-empty table")
            tab = {}
            dims = set()
            for (i, j), y in self.table.items():
                y = as_point(y)
                dims.add(y.size)
                tab[(int(i), int(j))] = y
            if len(dims) != 1:
                raise ProblemError("table forward model has inconsistent y dimensions")
            object.__setattr__(self, "table", tab)
            return
        if self.matrix is None:
            raise ProblemError(f"{self.kind} forward model needs a matrix")
        A = np.asarray(self.matrix, dtype=float)
        if A.ndim == 1:
            A = A.reshape(1, -1)
        if A.ndim != 2 or A.size == 0:
            raise ProblemError("forward matrix must be a non-empty 2-D array")
        if not np.all(np.isfinite(A)):
            raise ProblemError("forward matrix has non-finite entries")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        if self.kind == MIXED:
            m = A.shape[0]
            split = m if self.split is None else int(self.split)
            if split != m:
                raise ProblemError(f"mixed split must equal the row count {m}, got {split}")
            object.__setattr__(self, "split", split)

    @classmethod
    def linear(cls, matrix, kind: str = LINEAR_ADDITIVE) -> "ForwardModel":
        return cls(kind, matrix=np.asarray(matrix, dtype=float))

    @property
    def y_dim(self) -> int:
        if self.kind == TABLE:
            return next(iter(self.table.values())).size
        return self.matrix.shape[0]

    def expected_noise_dim(self) -> Optional[int]:
        if self.kind == TABLE:
            return None
        m = self.matrix.shape[0]
        return 2 * m if self.kind == MIXED else m

    def apply(self, x: np.ndarray, e: np.ndarray, atom: Optional[Atom] = None) -> np.ndarray:
        if self.kind == TABLE:
            try:
                return self.table[atom]
            except KeyError:
                raise ProblemError(f"forward table has no entry for (x, e) = {atom}") from None
        Ax = self.matrix @ x
        if self.kind == LINEAR_ADDITIVE:
            return Ax + e
        if self.kind == LINEAR_MULTIPLICATIVE:
            return Ax * e
        k = self.split
        return Ax * e[:k] + e[k:]

    def to_dict(self) -> dict:
        if self.kind == TABLE:
            return {"kind": TABLE, "table": [
                {"x": i, "e": j, "y": y.tolist()} for (i, j), y in sorted(self.table.items())
            ]}
        out = {"kind": self.kind, "matrix": self.matrix.tolist()}
        if self.kind == MIXED:
            out["split"] = self.split
        return out


@dataclass(frozen=True, eq=False)
class Problem:
    metric_x: MetricSpace
    metric_y: MetricSpace
    model_class: ModelClass
    noise_class: NoiseClass
    forward: ForwardModel
    grouping_tol: float = DEFAULT_GROUPING_TOL

    def __post_init__(self):
        if not (self.grouping_tol > 0 and math.isfinite(self.grouping_tol)):
            raise ProblemError("grouping_tol must be a positive finite number")
        try:
            self.metric_x.check_dimension(self.model_class.dim)
        except MetricError as exc:
            raise ProblemError(f"metric_x vs model class: {exc}") from None
        fwd = self.forward
        if fwd.kind == TABLE:
            missing = [(i, j) for i in range(self.n_x) for j in range(self.n_e)
                       if (i, j) not in fwd.table]
            if missing:
                raise ProblemError(f"forward table has gaps, first missing (x, e) = {missing[0]}")
            extra = [a for a in fwd.table if not (0 <= a[0] < self.n_x and 0 <= a[1] < self.n_e)]
            if extra:
                raise ProblemError(f"forward table entry {extra[0]} is out of range")
        else:
            if fwd.matrix.shape[1] != self.model_class.dim:
                raise ProblemError(
                    f"forward matrix has {fwd.matrix.shape[1]} columns but model points "
                    f"have dimension {self.model_class.dim}"
                )
            if self.noise_class.dim != fwd.expected_noise_dim():
                raise ProblemError(
                    f"noise dimension {self.noise_class.dim} does not match forward model "
                    f"(expected {fwd.expected_noise_dim()})"
                )
        try:
            self.metric_y.check_dimension(fwd.y_dim)
        except MetricError as exc:
            raise ProblemError(f"metric_y vs measurements: {exc}") from None

    @classmethod
    def linear(cls, matrix, model_points, noise_points=None, kind: str = LINEAR_ADDITIVE,
               metric_x: Optional[MetricSpace] = None, metric_y: Optional[MetricSpace] = None,
               grouping_tol: float = DEFAULT_GROUPING_TOL) -> "Problem":
        fwd = ForwardModel.linear(matrix, kind)
        if noise_points is None:
            noise = NoiseClass.noiseless(fwd.expected_noise_dim())
        else:
            noise = NoiseClass(np.asarray(noise_points, dtype=float))
        return cls(metric_x or MetricSpace.euclidean(), metric_y or MetricSpace.euclidean(),
                   ModelClass(np.asarray(model_points, dtype=float)), noise, fwd, grouping_tol)

    @property
    def n_x(self) -> int:
        return len(self.model_class)

    @property
    def n_e(self) -> int:
        return len(self.noise_class)

    def atoms(self):
        """All (x-index, e-index) pairs in ascending order."""
        for i in range(self.n_x):
            for j in range(self.n_e):
                yield (i, j)

    def with_forward(self, forward: ForwardModel) -> "Problem":
        return Problem(self.metric_x, self.metric_y, self.model_class, self.noise_class,
                       forward, self.grouping_tol)


def forward_eval(p: Problem, x_index: int, e_index: int) -> np.ndarray:
    if not 0 <= x_index < p.n_x:
        raise ProblemError(f"x index {x_index} out of range [0, {p.n_x})")
    if not 0 <= e_index < p.n_e:
        raise ProblemError(f"e index {e_index} out of range [0, {p.n_e})")
    return p.forward.apply(p.model_class.points[x_index], p.noise_class.points[e_index],
                           (x_index, e_index))


def quantize(y, tol: float) -> Key:
    """Per-coordinate bucket key floor(y_i / tol + 0.5)."""
    y = np.asarray(y, dtype=float).reshape(-1)
    return tuple(int(v) for v in np.floor(y / tol + 0.5))


@dataclass(frozen=True, eq=False)
class Group:
    key: Key
    representative: np.ndarray
    members: Tuple[Atom, ...]
    x_indices: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class MeasurementTable:
    problem: Problem
    groups: Tuple[Group, ...]
    group_of: np.ndarray  # (n_x, n_e) -> position in ``groups``
    _by_key: Dict[Key, int] = field(repr=False, default_factory=dict)

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def keys(self) -> List[Key]:
        return [g.key for g in self.groups]

    def index(self, key) -> int:
        try:
            return self._by_key[tuple(int(k) for k in key)]
        except KeyError:
            raise ProblemError(f"unknown measurement group key {list(key)}") from None

    def group(self, key) -> Group:
        return self.groups[self.index(key)]

    def lookup_y(self, y) -> Group:
        """Group for a raw measurement, or a ProblemError if y is not in M2^E."""
        y = as_point(y)
        if y.size != self.problem.forward.y_dim:
            raise ProblemError(
                f"measurement has dimension {y.size}, expected {self.problem.forward.y_dim}"
            )
        key = quantize(y, self.problem.grouping_tol)
        if key not in self._by_key:
            raise ProblemError(
                f"measurement {y.tolist()} (key {list(key)}) is not the image of any (x, e) "
                f"in the model and noise classes"
            )
        return self.groups[self._by_key[key]]

    def feasible_points(self, g: Group) -> np.ndarray:
        return self.problem.model_class.points[list(g.x_indices)]


def build_measurement_table(p: Problem) -> MeasurementTable:
    buckets: Dict[Key, List[Atom]] = {}
    values: Dict[Atom, np.ndarray] = {}
    for atom in p.atoms():
        y = forward_eval(p, *atom)
        values[atom] = y
        buckets.setdefault(quantize(y, p.grouping_tol), []).append(atom)
    groups = []
    group_of = np.empty((p.n_x, p.n_e), dtype=int)
    for pos, key in enumerate(sorted(buckets)):
        members = tuple(buckets[key])
        for i, j in members:
            group_of[i, j] = pos
        x_idx = tuple(sorted({i for i, _ in members}))
        rep = values[members[0]].copy()
        rep.setflags(write=False)
        groups.append(Group(key, rep, members, x_idx))
    group_of.setflags(write=False)
    by_key = {g.key: pos for pos, g in enumerate(groups)}
    return MeasurementTable(p, tuple(groups), group_of, by_key)


def feasible_set(t: MeasurementTable, key) -> Tuple[Tuple[Atom, ...], np.ndarray]:
    """Members of the group and the deduplicated x-points of F_y."""
    g = t.group(key)
    return g.members, t.feasible_points(g)


def map_groups(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Apply ``fn`` to each item, preserving order; results independent of ``threads``."""
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
