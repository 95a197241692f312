"""Static box world, limited-range sensing and ground-truth collision checks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import AABB
from .teb import TebBox


class SensingRangeError(ValueError):
    pass


@dataclass(frozen=True)
class SensorConfig:
    range: float = 2.0
    cell_edge: float = 1.5

    def __post_init__(self):
        if not (self.range > 0 and self.cell_edge > 0):
            raise ValueError("sensor range and cell edge must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "SensorConfig":
        return cls(**data)

    def to_dict(self) -> dict:
        return {"range": self.range, "cell_edge": self.cell_edge}


def split_box(box: AABB, cell_edge: float) -> list[AABB]:
    """Tile ``box`` with a regular lattice of sub-boxes whose edges are at most ``cell_edge``."""
    lo, size = np.asarray(box.lo), box.size
    counts = [max(1, math.ceil(s / cell_edge - 1e-12)) for s in size]
    edges = [np.linspace(lo[k], box.hi[k], counts[k] + 1) for k in range(3)]
    cells = []
    for i in range(counts[0]):
        for j in range(counts[1]):
            for k in range(counts[2]):
                cells.append(AABB((edges[0][i], edges[1][j], edges[2][k]),
                                  (edges[0][i + 1], edges[1][j + 1], edges[2][k + 1])))
    return cells


@dataclass
class Obstacle:
    box: AABB
    cells: list[AABB]
    revealed: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.revealed is None:
            self.revealed = np.zeros(len(self.cells), dtype=bool)

    @classmethod
    def from_box(cls, box: AABB, cell_edge: float) -> "Obstacle":
        return cls(box, split_box(box, cell_edge))


@dataclass
class World:
    obstacles: list[Obstacle]
    bounds: AABB
    start: np.ndarray
    goal: np.ndarray

    @classmethod
    def from_boxes(cls, boxes, bounds: AABB, start, goal, cell_edge: float = 1.5) -> "World":
        return cls([Obstacle.from_box(b, cell_edge) for b in boxes], bounds,
                   np.asarray(start, dtype=float), np.asarray(goal, dtype=float))

    @property
    def boxes(self) -> list[AABB]:
        return [o.box for o in self.obstacles]

    def fresh(self) -> "World":
        """Copy with nothing revealed."""
        return World([Obstacle(o.box, o.cells) for o in self.obstacles], self.bounds,
                     self.start.copy(), self.goal.copy())

    def revealed_count(self) -> int:
        return int(sum(o.revealed.sum() for o in self.obstacles))


def sense(pos, world: World, cfg: SensorConfig) -> tuple[list[AABB], bool]:
    """Reveal cells within ``range`` of ``pos`` along every axis; report only newly revealed ones."""
    pos = np.asarray(pos, dtype=float)
    if not np.all(np.isfinite(pos)):
        raise ValueError(f"sensor position {pos} is not finite")
    new = []
    for ob in world.obstacles:
        if ob.box.chebyshev_distance(pos) > cfg.range:
            continue
        for i, cell in enumerate(ob.cells):
            if not ob.revealed[i] and cell.chebyshev_distance(pos) <= cfg.range:
                ob.revealed[i] = True
                new.append(cell)
    return new, bool(new)


def revealed_obstacles(world: World) -> list[AABB]:
    return [c for ob in world.obstacles for c, seen in zip(ob.cells, ob.revealed) if seen]


def point_in_obstacle(pos, world: World) -> bool:
    return any(o.box.contains(pos) for o in world.obstacles)


def min_sensing_distance(teb: TebBox, dx_plan: float) -> float:
    """Smallest sensor range that still lets the planner react: ``2 * largest half-width + planner step``."""
    return 2.0 * teb.largest + dx_plan


def validate_sensor(cfg: SensorConfig, teb: TebBox, dx_plan: float) -> None:
    need = min_sensing_distance(teb, dx_plan)
    if cfg.range < need:
        raise SensingRangeError(
            f"sensor range {cfg.range} m is below 2*half_width + dx = 2*{teb.largest:.4f} + {dx_plan:.4f} = {need:.4f} m"
        )


def load_environment(path, cell_edge: float = 1.5) -> World:
    data = json.loads(Path(path).read_text())
    return environment_from_dict(data, cell_edge)


def environment_from_dict(data: dict, cell_edge: float = 1.5) -> World:
    boxes = [AABB.from_dict(o) for o in data["obstacles"]]
    return World.from_boxes(boxes, AABB.from_dict(data["bounds"]), data["start"], data["goal"], cell_edge)


def environment_to_dict(world: World) -> dict:
    return {
        "obstacles": [b.to_dict() for b in world.boxes],
        "bounds": world.bounds.to_dict(),
        "start": [float(v) for v in world.start],
        "goal": [float(v) for v in world.goal],
    }
