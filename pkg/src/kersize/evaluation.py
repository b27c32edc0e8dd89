"""Benchmarking decoders against kernel-size bounds.

Includes baseline decoders, optimality-gap reports, robust null-space
property (rNSP) checks for linear additive problems and sweeps over finite
families of forward models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .average_case import kersize_average, parse_order
from .decoder import SetValuedDecoder
from .measure import DiscreteMeasure, disintegrate, err_a, residual
from .metrics import MetricSpace, as_point, as_point_set, diameter, dist_point_set, pairwise
from .problem import (
    LINEAR_ADDITIVE, ForwardModel, MeasurementTable, Problem, ProblemError,
    build_measurement_table,
)
from .worst_case import kersize_worst

FIRST_FEASIBLE = "first_feasible"
CONSTANT = "constant"
FULL_FEASIBLE = "full_feasible"
RANDOM_FEASIBLE = "random_feasible"
BASELINES = (FIRST_FEASIBLE, CONSTANT, FULL_FEASIBLE, RANDOM_FEASIBLE)


def make_baseline(kind: str, p: Problem, t: MeasurementTable, point=None,
                  seed: int = 0) -> SetValuedDecoder:
    if kind not in BASELINES:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {', '.join(BASELINES)}")
    rng = np.random.default_rng(seed)
    if kind == CONSTANT:
        if point is None:
            raise ValueError("constant baseline needs a point")
        c = as_point(point, p.model_class.dim)
    outputs = {}
    for g in t.groups:
        F = t.feasible_points(g)
        if kind == CONSTANT:
            outputs[g.key] = [c]
        elif kind == FULL_FEASIBLE:
            outputs[g.key] = list(F)
        elif kind == FIRST_FEASIBLE:
            outputs[g.key] = [sorted(map(tuple, F.tolist()))[0]]
        else:
            outputs[g.key] = [F[int(rng.integers(len(F)))]]
    return SetValuedDecoder(outputs, name=kind)


def _ratio(num: float, den: float) -> Optional[float]:
    return num / den if den > 0 else None


@dataclass(frozen=True)
class DecoderGap:
    name: str
    worst_error: float
    err_a: Dict[float, float]
    ratio_worst_to_kersize: Optional[float]
    ratio_worst_to_floor: Optional[float]
    ratio_avg_to_kersize: Dict[float, Optional[float]]
    ratio_avg_to_floor: Dict[float, Optional[float]]

    def to_dict(self) -> dict:
        def ks(d):
            return {_order_label(k): v for k, v in d.items()}
        return {
            "name": self.name,
            "worst_error": self.worst_error,
            "err_a": ks(self.err_a),
            "ratio_worst_to_kersize": self.ratio_worst_to_kersize,
            "ratio_worst_to_half_kersize": self.ratio_worst_to_floor,
            "ratio_avg_to_kersize": ks(self.ratio_avg_to_kersize),
            "ratio_avg_to_half_kersize": ks(self.ratio_avg_to_floor),
        }


@dataclass(frozen=True)
class GapReport:
    kersize_worst: float
    kersize_average: Dict[float, float]
    decoders: Tuple[DecoderGap, ...]
    lower_bound_ok: bool
    group_rows: Tuple[dict, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "kersize_worst": self.kersize_worst,
            "kersize_average": {_order_label(k): v for k, v in self.kersize_average.items()},
            "verdicts": {"worst_error_ge_half_kersize": self.lower_bound_ok},
            "decoders": [d.to_dict() for d in self.decoders],
            "groups": list(self.group_rows),
        }


def _order_label(p: float) -> str:
    return "inf" if math.isinf(p) else repr(float(p))


def evaluate_decoder(p: Problem, mu: Optional[DiscreteMeasure], decoders,
                     orders: Sequence = (), table: Optional[MeasurementTable] = None,
                     lower_tol: float = 1e-9) -> GapReport:
    """Worst-case and p-th order errors of one or more decoders, with gap ratios.

    Gap ratios use kersize/2 as the "floor" denominator since the optimality
    constant itself is only bracketed.
    """
    if isinstance(decoders, SetValuedDecoder):
        decoders = [decoders]
    t = table if table is not None else build_measurement_table(p)
    orders = [parse_order(o) for o in orders]
    if orders:
        mu = mu if mu is not None else DiscreteMeasure.uniform(p)
        mu.check_shape(p)
        dis = disintegrate(mu, t)
    ks_w = kersize_worst(p, t)
    ks_a = {o: kersize_average(p, t, mu, dis, o) for o in orders}
    gaps = []
    rows: Dict[tuple, dict] = {g.key: {"key": list(g.key), "feasible": len(g.x_indices)}
                               for g in t.groups}
    lower_ok = True
    for dec in decoders:
        dec.check_total(t)
        r = residual(p, t, dec)
        worst = float(r.max())
        lower_ok &= worst >= ks_w / 2 - lower_tol
        errs = {o: err_a(r, mu, o) for o in orders}
        gaps.append(DecoderGap(
            dec.name, worst, errs,
            _ratio(worst, ks_w), _ratio(worst, ks_w / 2),
            {o: _ratio(errs[o], ks_a[o]) for o in orders},
            {o: _ratio(errs[o], ks_a[o] / 2) for o in orders},
        ))
        prefix = dec.name if len(decoders) > 1 else ""
        for g in t.groups:
            row = rows[g.key]
            row[_col(prefix, "worst_error")] = max(float(r[a]) for a in g.members)
            for o in orders:
                w = np.array([mu.weights[a] for a in g.members])
                v = np.array([r[a] for a in g.members])
                if math.isinf(o):
                    val = float(v[w > 0].max()) if np.any(w > 0) else 0.0
                else:
                    val = math.fsum(w * v**o)
                row[_col(prefix, f"err_p{_order_label(o)}_contribution")] = val
    return GapReport(ks_w, ks_a, tuple(gaps), bool(lower_ok),
                     tuple(rows[g.key] for g in t.groups))


def _col(prefix: str, name: str) -> str:
    return f"{prefix}:{name}" if prefix else name


@dataclass(frozen=True)
class RnspCertificate:
    """Claimed robust null-space constants D1, D2 > 0; eta = diam(E) is filled in."""

    D1: float
    D2: float
    eta: Optional[float] = None

    def __post_init__(self):
        if not (self.D1 > 0 and self.D2 > 0):
            raise ValueError("rNSP constants D1 and D2 must be positive")
        if self.eta is not None and self.eta < 0:
            raise ValueError("eta must be nonnegative")


@dataclass(frozen=True)
class RnspVerdict:
    ok: bool
    kersize: float
    bound: float
    eta: float

    def to_dict(self) -> dict:
        return {"ok": self.ok, "kersize": self.kersize, "bound": self.bound, "eta": self.eta}


def check_rnsp_bound(p: Problem, cert: RnspCertificate, tol: float = 1e-9) -> RnspVerdict:
    """Check the consequence kersize <= D2 * eta of the rNSP."""
    if p.forward.kind != LINEAR_ADDITIVE:
        raise ProblemError(f"rNSP check needs a linear_additive model, got {p.forward.kind}")
    eta = cert.eta if cert.eta is not None else diameter(p.metric_y, p.noise_class.points)
    ks = kersize_worst(p, build_measurement_table(p))
    bound = cert.D2 * eta
    return RnspVerdict(bool(ks <= bound + tol), ks, bound, eta)


def rnsp_falsify(A, M1, cert: RnspCertificate, probes: int = 10_000, seed: int = 0,
                 norm1: Optional[MetricSpace] = None, norm2: Optional[MetricSpace] = None,
                 norm3: Optional[MetricSpace] = None) -> Optional[np.ndarray]:
    """Search for h with |||h|||_1 > D1 dist_2(h, M1 - M1) + D2 |||Ah|||_3.

    Probes are differences of model points, their random perturbations and
    random directions at several scales. A returned h refutes the
    certificate; ``None`` proves nothing.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    M = as_point_set(M1, A.shape[1])
    n1 = norm1 or MetricSpace.euclidean()
    n2 = norm2 or n1
    n3 = norm3 or MetricSpace.euclidean()
    N = M.shape[1]
    diffs = (M[:, None, :] - M[None, :, :]).reshape(-1, N)
    diffs = np.unique(diffs, axis=0)
    scale = max(float(np.abs(diffs).max()), 1.0)
    zero_x = np.zeros((1, N))
    zero_y = np.zeros((1, A.shape[0]))
    rng = np.random.default_rng(seed)

    def violates(h: np.ndarray) -> bool:
        lhs = float(pairwise(n1, h[None, :], zero_x)[0, 0])
        rhs = (cert.D1 * dist_point_set(n2, h, diffs)
               + cert.D2 * float(pairwise(n3, (A @ h)[None, :], zero_y)[0, 0]))
        return lhs > rhs * (1 + 1e-12) + 1e-12

    for n in range(probes):
        mode = n % 3
        if mode == 0:
            h = diffs[n // 3 % len(diffs)].copy()
            if n >= 3 * len(diffs):
                h += rng.normal(scale=1e-3 * scale, size=N)
        elif mode == 1:
            base = diffs[int(rng.integers(len(diffs)))]
            h = base + rng.normal(scale=0.1 * scale, size=N)
        else:
            h = rng.normal(size=N) * scale * 10.0 ** rng.uniform(-3, 1)
        if violates(h):
            return h
    return None


@dataclass(frozen=True)
class SweepResult:
    kersizes: Tuple[Tuple[str, float], ...]
    best: Tuple[str, ...]
    best_kersize: float

    def to_dict(self) -> dict:
        return {"models": [{"id": i, "kersize": k} for i, k in self.kersizes],
                "best": list(self.best), "best_kersize": self.best_kersize}


def forward_model_sweep(family, base: Problem, ids: Optional[Iterable[str]] = None,
                        tie_tol: float = 0.0) -> SweepResult:
    """Worst-case kernel size of each forward model on the shared (M1, E).

    A finite stand-in for the infimum over all forward maps. Ties resolve to
    the lexicographically smallest model id, which comes first in ``best``.
    """
    family = list(family)
    if not family:
        raise ValueError("forward model family must be non-empty")
    ids = [str(i) for i in ids] if ids is not None else [f"{n:04d}" for n in range(len(family))]
    if len(ids) != len(family):
        raise ValueError("one id per model required")
    rows = []
    for mid, fwd in zip(ids, family):
        if not isinstance(fwd, ForwardModel):
            raise ProblemError(f"model {mid}: not a forward model")
        try:
            prob = base.with_forward(fwd)
        except ProblemError as exc:
            raise ProblemError(f"model {mid} is incompatible: {exc}") from None
        rows.append((mid, kersize_worst(prob, build_measurement_table(prob))))
    best_val = min(k for _, k in rows)
    best = tuple(sorted(mid for mid, k in rows if k <= best_val + tie_tol))
    assert all(best_val <= k for _, k in rows)
    return SweepResult(tuple(rows), best, best_val)
