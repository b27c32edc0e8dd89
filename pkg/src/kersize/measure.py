"""Discrete measures on M1 x E: pushforward, disintegration and p-th order errors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .decoder import SetValuedDecoder
from .metrics import pairwise
from .problem import Atom, Key, MeasurementTable, Problem, ProblemError


class MeasureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Nonnegative weights indexed by (x-index, e-index); need not be normalized."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim == 1:
            w = w.reshape(-1, 1)
        if w.ndim != 2 or w.size == 0:
            raise MeasureError("weights must be a non-empty |M1| x |E| matrix")
        if not np.all(np.isfinite(w)):
            raise MeasureError("weights must be finite")
        if np.any(w < 0):
            i, j = np.argwhere(w < 0)[0]
            raise MeasureError(f"negative weight at ({i}, {j})")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if not self.total_mass > 0:
            raise MeasureError("total mass must be positive")

    @classmethod
    def uniform(cls, p: Problem) -> "DiscreteMeasure":
        n = p.n_x * p.n_e
        return cls(np.full((p.n_x, p.n_e), 1.0 / n))

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights.ravel())

    def check_shape(self, p: Problem) -> None:
        if self.weights.shape != (p.n_x, p.n_e):
            raise MeasureError(
                f"weights have shape {self.weights.shape}, problem needs {(p.n_x, p.n_e)}"
            )

    def scaled(self, c: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.weights * c)

    def atom_weight(self, atom: Atom) -> float:
        return float(self.weights[atom])


@dataclass(frozen=True)
class PushforwardMeasure:
    masses: Dict[Key, float]

    def __getitem__(self, key) -> float:
        return self.masses[tuple(key)]

    @property
    def total(self) -> float:
        return math.fsum(self.masses.values())


@dataclass(frozen=True)
class Disintegration:
    """Conditional probabilities per positive-mass group.

    ``conditionals[key]`` is a tuple of (atom, probability) pairs over the
    group's own members. Zero-mass groups are absent: their conditional is
    undefined, which is harmless because they are null under the pushforward.
    """

    pushforward: PushforwardMeasure
    conditionals: Dict[Key, Tuple[Tuple[Atom, float], ...]]

    def defined(self, key) -> bool:
        return tuple(key) in self.conditionals

    def probs(self, key) -> np.ndarray:
        return np.array([w for _, w in self.conditionals[tuple(key)]])

    def atoms(self, key) -> Tuple[Atom, ...]:
        return tuple(a for a, _ in self.conditionals[tuple(key)])


def pushforward(mu: DiscreteMeasure, t: MeasurementTable) -> PushforwardMeasure:
    mu.check_shape(t.problem)
    return PushforwardMeasure({
        g.key: math.fsum(mu.weights[a] for a in g.members) for g in t.groups
    })


def disintegrate(mu: DiscreteMeasure, t: MeasurementTable) -> Disintegration:
    push = pushforward(mu, t)
    cond = {}
    for g in t.groups:
        mass = push.masses[g.key]
        if mass > 0:
            cond[g.key] = tuple((a, float(mu.weights[a]) / mass) for a in g.members)
    return Disintegration(push, cond)


def ess_sup_discrete(values, weights) -> float:
    """Maximum of ``values`` over atoms with strictly positive weight."""
    v = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if v.shape != w.shape:
        raise MeasureError("values and weights must have the same shape")
    pos = w > 0
    if not pos.any():
        raise MeasureError("essential supremum needs some positive weight")
    return float(v[pos].max())


def residual(p: Problem, t: MeasurementTable, dec: SetValuedDecoder) -> np.ndarray:
    """Residual map r(x, e) = d^H(x, dec(F(x, e))) as an |M1| x |E| array."""
    r = np.empty((p.n_x, p.n_e))
    X = p.model_class.points
    for g in t.groups:
        out = dec.output_array(g.key)
        per_x = pairwise(p.metric_x, X[list(g.x_indices)], out).max(axis=1)
        lookup = dict(zip(g.x_indices, per_x))
        for i, j in g.members:
            r[i, j] = lookup[i]
    return r


def _order(p) -> float:
    p = float(p)
    if not p >= 1:
        raise MeasureError(f"order p must lie in [1, inf], got {p}")
    return p


def err_a(r, mu: DiscreteMeasure, p=2.0) -> float:
    """L^p(mu) norm of a residual map; essential supremum for p = inf."""
    p = _order(p)
    r = np.asarray(r, dtype=float)
    if r.shape != mu.weights.shape:
        raise MeasureError("residual map and measure shapes differ")
    if math.isinf(p):
        return ess_sup_discrete(r, mu.weights)
    total = math.fsum((mu.weights * r**p).ravel())
    return total ** (1.0 / p)


def integrate(f, mu: DiscreteMeasure) -> float:
    return math.fsum((mu.weights * np.asarray(f, dtype=float)).ravel())


def integrate_disintegrated(f, dis: Disintegration) -> float:
    """Right-hand side of the reconstruction identity for an atomwise function f."""
    f = np.asarray(f, dtype=float)
    push = dis.pushforward.masses
    return math.fsum(
        push[key] * math.fsum(w * f[a] for a, w in cond)
        for key, cond in sorted(dis.conditionals.items())
    )


def check_problem_measure(p: Problem, mu: DiscreteMeasure) -> None:
    try:
        mu.check_shape(p)
    except MeasureError as exc:
        raise ProblemError(str(exc)) from None
