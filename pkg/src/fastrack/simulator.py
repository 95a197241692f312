"""Closed-loop simulation of the online planning and tracking loop.

Each control period: sense from the tracker position, inflate the revealed
cells by the error box, replan if something new was seen or the trajectory
ran out, advance the planner one period along its trajectory, pick the
controller mode from the relative state against that next planner state,
integrate the tracker under wind, and log the result.
"""

from __future__ import annotations

import csv
import enum
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controller import (
    ControllerMode,
    SwitchConfig,
    performance_control,
    safety_control,
    sample_gradients,
    select_mode,
    subsystem_values,
    worst_disturbance,
)
from .dynamics import (
    STATE_LABELS,
    Disturbance,
    ModelParams,
    ThetaGuardError,
    position,
    relative_state,
    tracking_derivative,
)
from .geometry import AABB
from .rrt import PlannerConfig, PlanningError, plan, sample_trajectory, to_trajectory
from .teb import TebBox, augment_obstacle
from .world import SensorConfig, World, point_in_obstacle, revealed_obstacles, sense, validate_sensor

CONTAINMENT_SLACK = 0.02


class DisturbanceMode(enum.Enum):
    NONE = "none"
    RANDOM_UNIFORM = "random_uniform"
    ADVERSARIAL = "adversarial"


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    substeps: int = 10
    disturbance_mode: DisturbanceMode = DisturbanceMode.NONE
    seed: int = 0
    planner_speed: float = 0.5
    max_time: float = 300.0

    def __post_init__(self):
        if not self.dt > 0 or self.substeps < 1:
            raise ValueError("dt must be positive and substeps at least 1")
        if not self.planner_speed > 0 or not self.max_time > 0:
            raise ValueError("planner_speed and max_time must be positive")
        object.__setattr__(self, "disturbance_mode", DisturbanceMode(self.disturbance_mode))

    @property
    def planner_step(self) -> float:
        """Largest distance the planner covers in one control period."""
        return self.planner_speed * self.dt

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        return cls(**data)

    def to_dict(self) -> dict:
        return {"dt": self.dt, "substeps": self.substeps, "disturbance_mode": self.disturbance_mode.value,
                "seed": self.seed, "planner_speed": self.planner_speed, "max_time": self.max_time}


@dataclass
class StepRecord:
    t: float
    s: np.ndarray
    p: np.ndarray
    r: np.ndarray
    values: tuple[float, float, float]
    mode: ControllerMode
    u: tuple[float, float, float]
    up: tuple[float, float, float]
    d: tuple[float, float, float]
    clamped: tuple[bool, bool, bool]
    replanned: bool
    latency: float


@dataclass
class Metrics:
    max_error: tuple[float, float, float]
    max_value: tuple[float, float, float]
    collisions: int
    teb_obstacle_hits: int
    containment_violations: int
    reached_goal: bool
    time_to_goal: float | None
    mode_occupancy: dict
    mean_latency: float
    replans: int
    failure: str | None

    @property
    def success(self) -> bool:
        return (self.reached_goal and self.collisions == 0 and self.teb_obstacle_hits == 0
                and self.containment_violations == 0 and self.failure is None)

    def to_dict(self) -> dict:
        d = dict(vars(self))
        d["success"] = self.success
        return d


@dataclass
class EpisodeLog:
    records: list[StepRecord] = field(default_factory=list)
    teb: TebBox | None = None
    world: World | None = None
    failure: str | None = None
    reached_goal: bool = False
    time_to_goal: float | None = None


def integrate_tracking(s, u, d, dt: float, substeps: int, params: ModelParams) -> np.ndarray:
    """Classical RK4 with ``u`` and ``d`` held over ``substeps`` equal sub-intervals."""
    s = np.asarray(s, dtype=float).copy()
    h = dt / substeps
    for _ in range(substeps):
        k1 = tracking_derivative(s, u, d, params)
        k2 = tracking_derivative(s + 0.5 * h * k1, u, d, params)
        k3 = tracking_derivative(s + 0.5 * h * k2, u, d, params)
        k4 = tracking_derivative(s + h * k3, u, d, params)
        s = s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return s


def disturbance_sample(mode: DisturbanceMode, r, grads, rng: np.random.Generator, params: ModelParams) -> Disturbance:
    mode = DisturbanceMode(mode)
    if mode is DisturbanceMode.NONE:
        return Disturbance(0.0, 0.0, 0.0)
    if mode is DisturbanceMode.RANDOM_UNIFORM:
        return Disturbance(*(float(v) for v in rng.uniform(-params.d_max, params.d_max, 3)))
    return worst_disturbance(r, grads, params)


def _at_goal(p, s, goal, teb: TebBox, radius: float) -> bool:
    if np.linalg.norm(p - goal) > radius:
        return False
    return bool(np.all(np.abs(position(s) - goal) <= np.asarray(teb.half_widths)))


def run_episode(cfg: SimConfig, tables, grads, teb: TebBox, world: World, planner_cfg: PlannerConfig,
                params: ModelParams = ModelParams(), switch: SwitchConfig = SwitchConfig(),
                sensor: SensorConfig = SensorConfig()) -> EpisodeLog:
    validate_sensor(sensor, teb, cfg.planner_step)
    world = world.fresh()
    rng = np.random.default_rng(cfg.seed)
    goal = world.goal
    p = world.start.copy()
    s = np.zeros(10)
    s[[0, 4, 8]] = p
    log = EpisodeLog(teb=teb, world=world)
    traj, traj_start, plans = None, 0.0, 0
    steps = int(round(cfg.max_time / cfg.dt))
    for k in range(steps):
        t = k * cfg.dt
        _, any_new = sense(position(s), world, sensor)
        exhausted = traj is None or t - traj_start >= traj.duration - 1e-12
        replanned = False
        if any_new or (exhausted and np.linalg.norm(p - goal) > planner_cfg.goal_radius):
            inflated = [augment_obstacle(c, teb) for c in revealed_obstacles(world)]
            try:
                path = plan(p, goal, inflated, _reseed(planner_cfg, plans))
            except PlanningError as exc:
                log.failure = f"planner: {exc}"
                break
            traj, traj_start, plans, replanned = to_trajectory(path, cfg.planner_speed), t, plans + 1, True
        p_next, _ = sample_trajectory(traj, t + cfg.dt - traj_start)
        r_next = relative_state(s, p_next)

        tic = time.perf_counter()
        q = sample_gradients(r_next, grads)
        values, _ = subsystem_values(r_next, tables)
        mode = select_mode(r_next, tables, teb, switch, values=values)
        if mode is ControllerMode.SAFETY:
            u = safety_control(r_next, q, params)
        else:
            u = performance_control(r_next, q, params, switch)
        latency = time.perf_counter() - tic

        d = disturbance_sample(cfg.disturbance_mode, r_next, q, rng, params)
        try:
            s_next = integrate_tracking(s, u, d, cfg.dt, cfg.substeps, params)
        except ThetaGuardError as exc:
            log.failure = f"theta guard: {exc}"
            break
        up = tuple(float(v) for v in (p_next - p) / cfg.dt)
        s, p = s_next, p_next
        r = relative_state(s, p)
        rec_values, rec_clamped = subsystem_values(r, tables)
        log.records.append(StepRecord(
            t=(k + 1) * cfg.dt, s=s, p=p.copy(), r=r, values=tuple(rec_values), mode=mode,
            u=tuple(float(v) for v in u), up=up, d=tuple(float(v) for v in d),
            clamped=tuple(rec_clamped), replanned=replanned, latency=latency,
        ))
        if _at_goal(p, s, goal, teb, planner_cfg.goal_radius):
            log.reached_goal, log.time_to_goal = True, (k + 1) * cfg.dt
            break
    return log


def _reseed(cfg: PlannerConfig, index: int) -> PlannerConfig:
    return PlannerConfig(cfg.bounds, cfg.step, cfg.goal_bias, cfg.max_iters, cfg.goal_radius, cfg.seed + index)


def compute_metrics(log: EpisodeLog) -> Metrics:
    if not log.records:
        raise ValueError("cannot summarise an empty episode log")
    hw = np.asarray(log.teb.half_widths) if log.teb is not None else np.full(3, np.inf)
    errors = np.array([np.abs(position(rec.s) - rec.p) for rec in log.records])
    values = np.array([rec.values for rec in log.records])
    collisions = teb_hits = 0
    if log.world is not None:
        for rec in log.records:
            collisions += point_in_obstacle(position(rec.s), log.world)
            if log.teb is not None:
                box = AABB.around(rec.p, hw)
                teb_hits += any(box.intersects(o) for o in log.world.boxes)
    violations = int(np.sum(np.any(errors > hw + CONTAINMENT_SLACK, axis=1)))
    modes = [rec.mode for rec in log.records]
    occupancy = {m.value: modes.count(m) / len(modes) for m in ControllerMode}
    return Metrics(
        max_error=tuple(float(v) for v in errors.max(axis=0)),
        max_value=tuple(float(v) for v in values.max(axis=0)),
        collisions=int(collisions),
        teb_obstacle_hits=int(teb_hits),
        containment_violations=violations,
        reached_goal=log.reached_goal,
        time_to_goal=log.time_to_goal,
        mode_occupancy=occupancy,
        mean_latency=float(np.mean([rec.latency for rec in log.records])),
        replans=int(sum(rec.replanned for rec in log.records)),
        failure=log.failure,
    )


CSV_COLUMNS = (
    ["t"] + list(STATE_LABELS) + ["px", "py", "pz"] + ["r_" + n for n in STATE_LABELS]
    + ["V_X4", "V_Y4", "V_Z2", "mode", "ax", "ay", "az", "bx", "by", "bz", "dx", "dy", "dz",
       "clamped_X4", "clamped_Y4", "clamped_Z2", "replanned"]
)


def _row(rec: StepRecord) -> list:
    f = lambda v: repr(float(v))  # noqa: E731 - shortest round-trip text for every float
    return ([f(rec.t)] + [f(v) for v in rec.s] + [f(v) for v in rec.p] + [f(v) for v in rec.r]
            + [f(v) for v in rec.values] + [rec.mode.value] + [f(v) for v in rec.u] + [f(v) for v in rec.up]
            + [f(v) for v in rec.d] + [int(c) for c in rec.clamped] + [int(rec.replanned)])


def export_csv(log: EpisodeLog, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for rec in log.records:
            w.writerow(_row(rec))


def export_json(log: EpisodeLog, path, metrics: Metrics | None = None) -> None:
    data = {
        "columns": CSV_COLUMNS,
        "rows": [_row(rec) for rec in log.records],
        "failure": log.failure,
        "reached_goal": log.reached_goal,
        "time_to_goal": log.time_to_goal,
        "teb": log.teb.to_dict() if log.teb is not None else None,
    }
    if metrics is not None:
        data["metrics"] = metrics.to_dict()
    Path(path).write_text(json.dumps(data))
