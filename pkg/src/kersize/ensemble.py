"""Seeded random linear-additive problems with non-trivial feasible sets.

Generic random data almost never produces two atoms with equal measurements.
Model points are therefore built on purpose to collide: base points are
shifted along null-space directions of A, and along pseudo-inverse images of
noise differences, so that A x + e = A x' + e' holds up to rounding.
"""

from __future__ import annotations

import numpy as np

from .measure import DiscreteMeasure
from .problem import Problem


def random_additive_problem(seed: int, max_dim: int = 4, max_points: int = 12,
                            max_noise: int = 4) -> Problem:
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, max_dim + 1))
    m = int(rng.integers(1, N + 1))
    A = np.round(rng.normal(size=(m, N)), 6)
    n_e = int(rng.integers(1, max_noise + 1))
    E = np.zeros((1, m))
    if n_e > 1:
        E = np.vstack([E, np.round(rng.normal(scale=0.3, size=(n_e - 1, m)), 6)])

    _, s, Vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-10))
    null = Vt[rank:]
    pinv = np.linalg.pinv(A)

    pts = []
    n_target = int(rng.integers(1, max_points + 1))
    while len(pts) < n_target:
        base = np.round(rng.normal(size=N), 3)
        pts.append(base)
        for _ in range(int(rng.integers(0, 4))):
            if len(pts) >= n_target:
                break
            shift = np.zeros(N)
            if len(null) and rng.random() < 0.7:
                shift += null.T @ rng.normal(size=len(null))
            if n_e > 1 and rng.random() < 0.5:
                i, j = rng.choice(n_e, size=2, replace=False)
                shift += pinv @ (E[i] - E[j])
            if np.any(shift != 0):
                pts.append(base + shift)
    pts = np.unique(np.array(pts), axis=0)
    return Problem.linear(A, pts, E)


def random_measure(p: Problem, seed: int, zero_fraction: float = 0.2) -> DiscreteMeasure:
    """Random weights, some exactly zero, never all zero; total mass not normalized."""
    rng = np.random.default_rng(seed)
    w = rng.exponential(size=(p.n_x, p.n_e))
    w[rng.random(w.shape) < zero_fraction] = 0.0
    if not w.sum() > 0:
        w.flat[int(rng.integers(w.size))] = 1.0
    return DiscreteMeasure(w * rng.uniform(0.5, 3.0))
