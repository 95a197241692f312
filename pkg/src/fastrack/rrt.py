"""Goal-biased RRT over 3D position with box obstacles, and constant-speed trajectories.

Random numbers come from a small, fully specified generator so plans
reproduce bit-for-bit on any platform:

* seeding: ``state = splitmix64(seed)``, replaced by a fixed odd constant if zero;
* step (xorshift64*): ``x ^= x >> 12; x ^= x << 25; x ^= x >> 27``,
  output ``(x * 0x2545F4914F6CDD1D) mod 2**64``;
* unit float: ``(output >> 11) * 2**-53``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import AABB

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShiftRng:
    def __init__(self, seed: int):
        self.state = splitmix64(int(seed) & MASK64) or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo, hi):
        return lo + (hi - lo) * self.random()


class PlanningError(RuntimeError):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    bounds: AABB
    step: float = 0.5
    goal_bias: float = 0.1
    max_iters: int = 20_000
    goal_radius: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"RRT step must be positive, got {self.step}")
        if not 0 <= self.goal_bias <= 1:
            raise ValueError(f"goal_bias must lie in [0, 1], got {self.goal_bias}")
        if self.max_iters < 1 or self.goal_radius < 0:
            raise ValueError("max_iters must be >= 1 and goal_radius >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "PlannerConfig":
        data = dict(data)
        data["bounds"] = AABB.from_dict(data["bounds"])
        return cls(**data)

    def to_dict(self) -> dict:
        return {"bounds": self.bounds.to_dict(), "step": self.step, "goal_bias": self.goal_bias,
                "max_iters": self.max_iters, "goal_radius": self.goal_radius, "seed": self.seed}


@dataclass(frozen=True)
class PathPolyline:
    waypoints: np.ndarray

    def __post_init__(self):
        w = np.array(self.waypoints, dtype=float).reshape(-1, 3)
        if len(w) < 2:
            raise ValueError("a path needs at least two waypoints")
        if np.any(np.all(np.diff(w, axis=0) == 0, axis=1)):
            raise ValueError("consecutive waypoints must be distinct")
        w.setflags(write=False)
        object.__setattr__(self, "waypoints", w)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1).sum())


@dataclass(frozen=True)
class Trajectory:
    waypoints: np.ndarray
    times: np.ndarray
    speed: float

    @property
    def duration(self) -> float:
        return float(self.times[-1])


def _box_arrays(obstacles):
    if isinstance(obstacles, tuple):
        return obstacles
    obstacles = list(obstacles)
    lo = np.array([o.lo for o in obstacles], dtype=float).reshape(-1, 3)
    hi = np.array([o.hi for o in obstacles], dtype=float).reshape(-1, 3)
    return lo, hi


def _segment_hits(a, b, lo, hi) -> bool:
    """Slab test of the closed segment against all closed boxes at once."""
    if len(lo) == 0:
        return False
    d = b - a
    t0 = np.zeros(len(lo))
    t1 = np.ones(len(lo))
    alive = np.ones(len(lo), dtype=bool)
    for k in range(3):
        if d[k] == 0.0:
            alive &= (a[k] >= lo[:, k]) & (a[k] <= hi[:, k])
            continue
        ta = (lo[:, k] - a[k]) / d[k]
        tb = (hi[:, k] - a[k]) / d[k]
        t0 = np.maximum(t0, np.minimum(ta, tb))
        t1 = np.minimum(t1, np.maximum(ta, tb))
    return bool(np.any(alive & (t0 <= t1)))


def segment_free(a, b, obstacles) -> bool:
    """True when the closed segment ``ab`` misses every closed box (touching is a hit)."""
    lo, hi = _box_arrays(obstacles)
    return not _segment_hits(np.asarray(a, dtype=float), np.asarray(b, dtype=float), lo, hi)


def _inside_any(p, boxes) -> bool:
    lo, hi = boxes
    return bool(np.any(np.all((p >= lo) & (p <= hi), axis=1)))


def plan(start, goal, obstacles, cfg: PlannerConfig) -> PathPolyline:
    """Single-tree RRT with goal bias; tries the straight segment first."""
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    obstacles = _box_arrays(obstacles)
    if _inside_any(start, obstacles):
        raise PlanningError(f"start {start} lies inside an inflated obstacle")
    if _inside_any(goal, obstacles):
        raise PlanningError(f"goal {goal} lies inside an inflated obstacle")
    if np.array_equal(start, goal):
        raise PlanningError("start and goal coincide")
    if segment_free(start, goal, obstacles):
        return PathPolyline(np.stack([start, goal]))

    rng = XorShiftRng(cfg.seed)
    lo, hi = np.asarray(cfg.bounds.lo), np.asarray(cfg.bounds.hi)
    nodes = np.empty((cfg.max_iters + 1, 3))
    parents = np.empty(cfg.max_iters + 1, dtype=np.int64)
    nodes[0], parents[0], count = start, -1, 1
    for _ in range(cfg.max_iters):
        if rng.random() < cfg.goal_bias:
            target = goal
        else:
            target = np.array([rng.uniform(lo[k], hi[k]) for k in range(3)])
        dist2 = np.sum((nodes[:count] - target) ** 2, axis=1)
        near = int(np.argmin(dist2))
        gap = float(np.sqrt(dist2[near]))
        if gap == 0.0:
            continue
        new = target if gap <= cfg.step else nodes[near] + (target - nodes[near]) * (cfg.step / gap)
        if not segment_free(nodes[near], new, obstacles):
            continue
        nodes[count], parents[count] = new, near
        count += 1
        if np.linalg.norm(new - goal) <= cfg.goal_radius:
            return PathPolyline(_trace(nodes, parents, count - 1, goal, obstacles))
    raise PlanningError(f"no path to the goal within {cfg.max_iters} iterations")


def _trace(nodes, parents, leaf, goal, obstacles) -> np.ndarray:
    chain = []
    i = leaf
    while i >= 0:
        chain.append(nodes[i])
        i = parents[i]
    chain.reverse()
    if not np.array_equal(chain[-1], goal) and segment_free(chain[-1], goal, obstacles):
        chain.append(goal)
    return np.stack(chain)


def to_trajectory(path: PathPolyline, speed: float) -> Trajectory:
    if not speed > 0:
        raise ValueError(f"planner speed must be positive, got {speed}")
    seg = np.linalg.norm(np.diff(path.waypoints, axis=0), axis=1)
    times = np.concatenate([[0.0], np.cumsum(seg) / speed])
    return Trajectory(path.waypoints, times, float(speed))


def sample_trajectory(traj: Trajectory, t: float) -> tuple[np.ndarray, bool]:
    """Position at time ``t``; past the end it stays at the last waypoint with ``clamped=True``."""
    if t < 0:
        raise ValueError(f"trajectory time must be non-negative, got {t}")
    if t >= traj.times[-1]:
        return traj.waypoints[-1].copy(), t > traj.times[-1]
    k = int(np.searchsorted(traj.times, t, side="right")) - 1
    f = (t - traj.times[k]) / (traj.times[k + 1] - traj.times[k])
    return traj.waypoints[k] + f * (traj.waypoints[k + 1] - traj.waypoints[k]), False


def export_csv(traj: Trajectory, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "z"])
        for t, p in zip(traj.times, traj.waypoints):
            w.writerow([repr(float(t)), *(repr(float(c)) for c in p)])
