"""Axis-aligned boxes in 3D position space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AABB:
    """Closed box ``[lo, hi]``; faces belong to the box."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("AABB corners must be 3-vectors")
        if not all(np.isfinite(lo + hi)):
            raise ValueError("AABB corners must be finite")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"AABB min corner {lo} exceeds max corner {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def around(cls, center, half_widths) -> "AABB":
        c = np.asarray(center, dtype=float)
        h = np.asarray(half_widths, dtype=float)
        return cls(tuple(c - h), tuple(c + h))

    @classmethod
    def from_dict(cls, data: dict) -> "AABB":
        return cls(tuple(data["min"]), tuple(data["max"]))

    def to_dict(self) -> dict:
        return {"min": list(self.lo), "max": list(self.hi)}

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))

    @property
    def size(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.size))

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))

    def intersects(self, other: "AABB") -> bool:
        """Closed-set overlap: boxes that only touch still intersect."""
        return all(a_lo <= b_hi and b_lo <= a_hi for a_lo, a_hi, b_lo, b_hi in zip(self.lo, self.hi, other.lo, other.hi))

    def inflate(self, half_widths) -> "AABB":
        h = np.asarray(half_widths, dtype=float)
        return AABB(tuple(np.asarray(self.lo) - h), tuple(np.asarray(self.hi) + h))

    def translate(self, offset) -> "AABB":
        o = np.asarray(offset, dtype=float)
        return AABB(tuple(np.asarray(self.lo) + o), tuple(np.asarray(self.hi) + o))

    def chebyshev_distance(self, point) -> float:
        """Largest per-axis gap from ``point`` to the box (zero inside)."""
        p = np.asarray(point, dtype=float)
        gap = np.maximum(np.asarray(self.lo) - p, 0.0) + np.maximum(p - np.asarray(self.hi), 0.0)
        return float(gap.max())
