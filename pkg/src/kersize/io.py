"""Problem-spec JSON ingestion and canonical report serialization."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import jsonschema
import numpy as np

from .measure import DiscreteMeasure, MeasureError
from .metrics import EUCLIDEAN, TABLE as TABLE_METRIC, WEIGHTED_LP, MetricError, MetricSpace
from .problem import (
    DEFAULT_GROUPING_TOL, FORWARD_KINDS, MIXED, TABLE, ForwardModel, ModelClass, NoiseClass,
    Problem, ProblemError,
)


class SpecError(ValueError):
    """Validation failure; ``path`` addresses the offending JSON location."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_MATRIX = {"type": "array", "items": _VEC, "minItems": 1}

_METRIC = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": [EUCLIDEAN, WEIGHTED_LP, TABLE_METRIC]},
        "exponent": _NUM,
        "weights": _VEC,
        "points": _MATRIX,
        "matrix": _MATRIX,
    },
    "additionalProperties": False,
}

PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["model_class", "forward"],
    "properties": {
        "metric": _METRIC,
        "metric_y": _METRIC,
        "model_class": {"type": "object", "required": ["points"],
                        "properties": {"points": _MATRIX}, "additionalProperties": False},
        "noise_class": {"type": "object", "required": ["points"],
                        "properties": {"points": _MATRIX}, "additionalProperties": False},
        "forward": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(FORWARD_KINDS)},
                "matrix": _MATRIX,
                "split": {"type": "integer", "minimum": 1},
                "table": {"type": "array", "minItems": 1, "items": {
                    "type": "object", "required": ["x", "e", "y"],
                    "properties": {"x": {"type": "integer", "minimum": 0},
                                   "e": {"type": "integer", "minimum": 0},
                                   "y": _VEC},
                    "additionalProperties": False,
                }},
            },
            "additionalProperties": False,
        },
        "measure": {"type": "object", "properties": {"weights": _MATRIX},
                    "additionalProperties": False},
        "grouping_tol": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

FORWARD_SCHEMA = PROBLEM_SCHEMA["properties"]["forward"]


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def _validate(data, schema, prefix: Tuple = ()) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise SpecError(_path(prefix + tuple(err.absolute_path)), err.message)


def _rect(rows, path: str) -> np.ndarray:
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise SpecError(f"{path}[{i}]", f"row has {len(r)} entries, expected {width}")
    return np.asarray(rows, dtype=float)


def _metric(d: Optional[dict], path: str) -> MetricSpace:
    if d is None:
        return MetricSpace.euclidean()
    try:
        if d["kind"] == EUCLIDEAN:
            return MetricSpace.euclidean()
        if d["kind"] == WEIGHTED_LP:
            if "weights" not in d:
                raise SpecError(f"{path}.weights", "required for weighted_lp")
            return MetricSpace.weighted_lp(d.get("exponent", 2.0), d["weights"])
        for k in ("points", "matrix"):
            if k not in d:
                raise SpecError(f"{path}.{k}", "required for table metrics")
        return MetricSpace.from_table(_rect(d["points"], f"{path}.points"),
                                      _rect(d["matrix"], f"{path}.matrix"))
    except MetricError as exc:
        raise SpecError(path, str(exc)) from None


def parse_forward(d: dict, path: str = "forward") -> ForwardModel:
    _validate(d, FORWARD_SCHEMA, tuple(path.split(".")) if path else ())
    kind = d["kind"]
    try:
        if kind == TABLE:
            if "table" not in d:
                raise SpecError(f"{path}.table", "required for table forward models")
            table = {}
            for n, entry in enumerate(d["table"]):
                atom = (entry["x"], entry["e"])
                if atom in table:
                    raise SpecError(f"{path}.table[{n}]", f"duplicate entry for (x, e) = {atom}")
                table[atom] = entry["y"]
            return ForwardModel(TABLE, table=table)
        if "matrix" not in d:
            raise SpecError(f"{path}.matrix", f"required for {kind} forward models")
        A = _rect(d["matrix"], f"{path}.matrix")
        return ForwardModel(kind, matrix=A, split=d.get("split") if kind == MIXED else None)
    except ProblemError as exc:
        raise SpecError(path, str(exc)) from None


def parse_problem_dict(data: Any) -> Tuple[Problem, Optional[DiscreteMeasure]]:
    _validate(data, PROBLEM_SCHEMA)
    metric_x = _metric(data.get("metric"), "metric")
    metric_y = _metric(data.get("metric_y"), "metric_y")
    forward = parse_forward(data["forward"])
    pts = _rect(data["model_class"]["points"], "model_class.points")
    try:
        model = ModelClass(pts)
    except ProblemError as exc:
        raise SpecError("model_class.points", str(exc)) from None
    if "noise_class" in data:
        noise = NoiseClass(_rect(data["noise_class"]["points"], "noise_class.points"))
    elif forward.kind == TABLE:
        noise = NoiseClass(np.zeros((1, 1)))
    else:
        noise = NoiseClass.noiseless(forward.expected_noise_dim())
    tol = float(data.get("grouping_tol", DEFAULT_GROUPING_TOL))
    try:
        problem = Problem(metric_x, metric_y, model, noise, forward, tol)
    except ProblemError as exc:
        raise SpecError("", str(exc)) from None
    mu = None
    if "measure" in data and "weights" in data["measure"]:
        W = _rect(data["measure"]["weights"], "measure.weights")
        if W.shape != (problem.n_x, problem.n_e):
            raise SpecError("measure.weights",
                            f"shape {W.shape} does not match |M1| x |E| = "
                            f"{(problem.n_x, problem.n_e)}")
        try:
            mu = DiscreteMeasure(W)
        except MeasureError as exc:
            raise SpecError("measure.weights", str(exc)) from None
    return problem, mu


def parse_problem_spec(text: str) -> Tuple[Problem, Optional[DiscreteMeasure]]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("", f"invalid JSON: {exc}") from None
    return parse_problem_dict(data)


def problem_to_dict(p: Problem, mu: Optional[DiscreteMeasure] = None) -> dict:
    """Canonical spec with every default filled in."""
    out = {
        "metric": p.metric_x.to_dict(),
        "metric_y": p.metric_y.to_dict(),
        "model_class": {"points": p.model_class.points.tolist()},
        "noise_class": {"points": p.noise_class.points.tolist()},
        "forward": p.forward.to_dict(),
        "grouping_tol": p.grouping_tol,
    }
    if mu is not None:
        out["measure"] = {"weights": mu.weights.tolist()}
    return out


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, shortest round-trip floats, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False,
                      ensure_ascii=False) + "\n"


def config_hash(*parts) -> str:
    blob = json.dumps(_plain(list(parts)), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _cell(v) -> str:
    v = _plain(v)
    if isinstance(v, list):
        return json.dumps(v, separators=(",", ":"))
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def rows_to_csv(rows: Sequence[dict], columns: Optional[List[str]] = None) -> str:
    if columns is None:
        columns = []
        for r in rows:
            for c in r:
                if c not in columns:
                    columns.append(c)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def emit_report(report: dict, fmt: str = "json") -> bytes:
    if fmt == "json":
        return canonical_json(report).encode()
    if fmt == "csv":
        return report_csv(report).encode()
    raise ValueError(f"unknown format {fmt!r}")


def report_csv(report: dict) -> str:
    """One row per measurement group, merging whichever sections the report has."""
    merged: Dict[str, dict] = {}
    order: List[str] = []

    def row(key) -> dict:
        k = json.dumps(key)
        if k not in merged:
            merged[k] = {"key": ";".join(str(v) for v in key)}
            order.append(k)
        return merged[k]

    cols = ["key"]
    wc = report.get("worst_case")
    if wc:
        for g in wc["groups"]:
            row(g["key"]).update(feasible=g["feasible"], diameter=g["diameter"],
                                 radius=g["radius"], worst_centers=g["centers"])
        cols += ["feasible", "diameter", "radius", "worst_centers"]
    av = report.get("average")
    if av:
        for g in av["groups"]:
            row(g["key"]).update(mass=g["mass"], posterior_support=g["posterior_support"],
                                 average_outputs=g["outputs"],
                                 error_contribution=g["error_contribution"])
        cols += ["mass", "posterior_support", "average_outputs", "error_contribution"]
    ev = report.get("evaluation")
    if ev:
        for g in ev["groups"]:
            row(g["key"]).update({k: v for k, v in g.items() if k != "key"})
        for g in ev["groups"][:1]:
            cols += [k for k in g if k != "key" and k not in cols]
    sw = report.get("sweep")
    if sw and not (wc or av or ev):
        return rows_to_csv([{"id": m["id"], "kersize": m["kersize"],
                             "best": m["id"] in sw["best"]} for m in sw["models"]],
                           ["id", "kersize", "best"])
    return rows_to_csv([merged[k] for k in order], cols)
