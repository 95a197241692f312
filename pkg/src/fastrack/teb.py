"""Tracking error bound extraction and obstacle inflation."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dynamics import position
from .geometry import AABB
from .grid import ValueTable


class EmptyLevelSetError(ValueError):
    pass


class ContainmentError(AssertionError):
    """A table node below the level sits outside ``|position| <= level``, so the table is not ``>= l``."""


class UnconvergedTableError(ValueError):
    pass


@dataclass(frozen=True)
class TebBox:
    """Per-axis half-widths of the box the tracker stays in around the planner."""

    half_widths: tuple[float, float, float]
    v_bar: tuple[float, float, float]
    epsilon: float

    def __post_init__(self):
        hw = tuple(float(h) for h in self.half_widths)
        if len(hw) != 3 or any(not np.isfinite(h) or h < 0 for h in hw):
            raise ValueError(f"half-widths must be three finite non-negative numbers, got {self.half_widths}")
        object.__setattr__(self, "half_widths", hw)
        object.__setattr__(self, "v_bar", tuple(float(v) for v in self.v_bar))

    @property
    def largest(self) -> float:
        return max(self.half_widths)

    def to_dict(self) -> dict:
        return {"half_widths": list(self.half_widths), "v_bar": list(self.v_bar), "epsilon": self.epsilon}

    @classmethod
    def from_dict(cls, data: dict) -> "TebBox":
        return cls(tuple(data["half_widths"]), tuple(data["v_bar"]), float(data["epsilon"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def min_value(table: ValueTable) -> float:
    return float(np.min(table.values))


def _position_coords(table: ValueTable) -> np.ndarray:
    pos = table.grid.axes[0]
    shape = (-1,) + (1,) * (table.grid.ndim - 1)
    return np.broadcast_to(np.abs(pos).reshape(shape), table.grid.shape)


def position_extent(table: ValueTable, level: float) -> float:
    """Largest ``|position|`` over nodes whose value is at most ``level``."""
    inside = table.values <= level
    if not inside.any():
        raise EmptyLevelSetError(f"level {level} is below the table minimum {min_value(table)}")
    extent = float(_position_coords(table)[inside].max())
    if extent > level + 1e-12:
        raise ContainmentError(f"sub-level set at {level} reaches |position| = {extent}")
    return extent


def teb_box(tables, reports=None, epsilon: float = 0.01) -> TebBox:
    """Box bound from the X4, Y4 and Z2 tables (in that order) at level ``V_bar + epsilon``."""
    tables = list(tables)
    if len(tables) != 3:
        raise ValueError("need exactly three subsystem tables (X4, Y4, Z2)")
    flags = [r.converged for r in reports] if reports is not None else [t.converged for t in tables]
    for t, ok in zip(tables, flags):
        if not ok:
            raise UnconvergedTableError(f"subsystem {t.subsystem or '?'} did not converge")
    v_bar = tuple(min_value(t) for t in tables)
    widths = tuple(position_extent(t, vb + epsilon) for t, vb in zip(tables, v_bar))
    return TebBox(widths, v_bar, epsilon)


def augment_obstacle(o: AABB, teb: TebBox) -> AABB:
    """Minkowski sum of the obstacle with the error box."""
    return o.inflate(teb.half_widths)


def teb_in_planner_frame(s, teb: TebBox) -> AABB:
    """Planner positions that keep the tracker at ``s`` inside its error bound."""
    return AABB.around(position(s), teb.half_widths)
