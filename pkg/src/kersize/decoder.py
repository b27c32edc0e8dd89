"""Set-valued reconstruction maps defined on measurement groups."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from .problem import Key, MeasurementTable, ProblemError

PointT = Tuple[float, ...]


def _canon(points: Iterable) -> Tuple[PointT, ...]:
    pts = sorted({tuple(float(v) for v in np.asarray(p, dtype=float).reshape(-1)) for p in points})
    if not pts:
        raise ProblemError("decoder output sets must be non-empty")
    return tuple(pts)


@dataclass(frozen=True)
class SetValuedDecoder:
    """Finite output set per group key; the selector is the lexicographic minimum."""

    outputs: Mapping[Key, Tuple[PointT, ...]]
    name: str = "decoder"

    def __post_init__(self):
        object.__setattr__(self, "outputs", {
            tuple(int(k) for k in key): _canon(pts) for key, pts in self.outputs.items()
        })

    @classmethod
    def from_points(cls, outputs: Mapping, name: str = "decoder") -> "SetValuedDecoder":
        return cls(dict(outputs), name)

    def __call__(self, key) -> Tuple[PointT, ...]:
        return self.output(key)

    def output(self, key) -> Tuple[PointT, ...]:
        key = tuple(int(k) for k in key)
        try:
            return self.outputs[key]
        except KeyError:
            raise ProblemError(f"decoder {self.name!r} is undefined on group {list(key)}") from None

    def output_array(self, key) -> np.ndarray:
        return np.asarray(self.output(key), dtype=float)

    def select(self, key) -> PointT:
        return self.output(key)[0]

    def check_total(self, t: MeasurementTable) -> None:
        for g in t.groups:
            self.output(g.key)

    def to_dict(self) -> dict:
        return {"outputs": [{"key": list(k), "points": [list(p) for p in pts]}
                            for k, pts in sorted(self.outputs.items())]}


def decoder_from_dict(data: dict, t: Optional[MeasurementTable] = None,
                      name: str = "external") -> SetValuedDecoder:
    """Load the decoder-table JSON shape.

    Each entry carries ``points`` and either a group ``key`` or a raw
    measurement ``y`` (quantized against ``t``).
    """
    if not isinstance(data, dict) or not isinstance(data.get("outputs"), list):
        raise ProblemError("decoder table must be an object with an 'outputs' list")
    outputs: Dict[Key, tuple] = {}
    for n, entry in enumerate(data["outputs"]):
        where = f"outputs[{n}]"
        if not isinstance(entry, dict) or "points" not in entry:
            raise ProblemError(f"{where}: entry needs 'points'")
        if "key" in entry:
            key = tuple(int(k) for k in entry["key"])
        elif "y" in entry:
            if t is None:
                raise ProblemError(f"{where}: 'y' entries need a problem to quantize against")
            key = t.lookup_y(entry["y"]).key
        else:
            raise ProblemError(f"{where}: entry needs 'key' or 'y'")
        if key in outputs:
            raise ProblemError(f"{where}: duplicate group key {list(key)}")
        pts = entry["points"]
        if not isinstance(pts, list) or not pts:
            raise ProblemError(f"{where}.points: must be a non-empty list of points")
        outputs[key] = _canon(pts)
    return SetValuedDecoder(outputs, name)
