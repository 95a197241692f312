"""Hybrid tracking controller: gradient sign rules, adversaries and mode switching.

The relative game is control-affine, so the optimal inputs depend only on
the sign of one gradient component each:

* tracker attitude ``a = -a_max * sign(dV/domega)``,
* tracker thrust ``az = 0`` when ``kT * dV/dvz > 0``, else ``az_max``,
* planner velocity ``b = -b_max * sign(dV/dpos)``,
* wind ``d = +d_max * sign(dV/dpos)``.

A gradient within ``TIE_TOL`` of zero leaves every input optimal; the tie
picks hover for the tracker and zero for the adversaries.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Disturbance, ModelParams, PlannerControl, SubsystemId, TrackerControl, subsystem_project
from .grid import interpolate, interpolate_gradient
from .teb import TebBox

TIE_TOL = 1e-9
SUBSYSTEMS = (SubsystemId.X4, SubsystemId.Y4, SubsystemId.Z2)


class ControllerMode(enum.Enum):
    SAFETY = "safety"
    PERFORMANCE = "performance"


class PerformanceKind(enum.Enum):
    MIRROR = "mirror"
    PROPORTIONAL = "proportional"


@dataclass(frozen=True)
class ProportionalGains:
    """Linear feedback on the relative state; the horizontal gains stabilise the linearised axis loop."""

    position: float = 0.2
    velocity: float = 0.35
    attitude: float = 1.5
    rate: float = 0.15
    vertical_position: float = 1.0
    vertical_velocity: float = 2.0


@dataclass(frozen=True)
class SwitchConfig:
    margin: float = 0.05
    performance_kind: PerformanceKind = PerformanceKind.MIRROR
    gains: ProportionalGains = field(default_factory=ProportionalGains)

    def __post_init__(self):
        if not self.margin > 0:
            raise ValueError(f"switch margin must be positive, got {self.margin}")
        object.__setattr__(self, "performance_kind", PerformanceKind(self.performance_kind))

    @classmethod
    def from_dict(cls, data: dict) -> "SwitchConfig":
        data = dict(data)
        if "gains" in data:
            data["gains"] = ProportionalGains(**data["gains"])
        return cls(**data)

    def to_dict(self) -> dict:
        return {"margin": self.margin, "performance_kind": self.performance_kind.value, "gains": vars(self.gains)}


@dataclass
class GradientSample:
    """Interpolated gradients of the three subsystem tables at one relative state."""

    x4: np.ndarray
    y4: np.ndarray
    z2: np.ndarray
    clamped: tuple[bool, bool, bool]


def sample_gradients(r, grads) -> GradientSample:
    """``grads`` holds the X4, Y4 and Z2 gradient tables in that order."""
    r = np.asarray(r, dtype=float)
    parts, flags = [], []
    for sid, table in zip(SUBSYSTEMS, grads):
        q, clamped = interpolate_gradient(table, subsystem_project(r, sid))
        parts.append(q)
        flags.append(clamped)
    return GradientSample(parts[0], parts[1], parts[2], tuple(flags))


def _sign(q: float) -> float:
    if abs(q) <= TIE_TOL:
        return 0.0
    return 1.0 if q > 0 else -1.0


def _as_sample(r, grads) -> GradientSample:
    return grads if isinstance(grads, GradientSample) else sample_gradients(r, grads)


def safety_control(r, grads, params: ModelParams) -> TrackerControl:
    """Minimiser of the Hamiltonian at the interpolated gradient."""
    q = _as_sample(r, grads)
    p = params
    ax = -p.a_max * _sign(q.x4[3])
    ay = -p.a_max * _sign(q.y4[3])
    qz = p.kT * q.z2[1]
    if abs(qz) <= TIE_TOL:
        az = p.hover_thrust
    else:
        az = 0.0 if qz > 0 else p.az_max
    return TrackerControl(ax, ay, az)


def planner_adversary(r, grads, params: ModelParams) -> PlannerControl:
    """Planner velocity that pulls away from the tracker as hard as allowed."""
    q = _as_sample(r, grads)
    return PlannerControl(*(-params.b_max * _sign(g[0]) for g in (q.x4, q.y4, q.z2)))


def worst_disturbance(r, grads, params: ModelParams) -> Disturbance:
    q = _as_sample(r, grads)
    return Disturbance(*(params.d_max * _sign(g[0]) for g in (q.x4, q.y4, q.z2)))


def subsystem_values(r, tables) -> tuple[list[float], list[bool]]:
    r = np.asarray(r, dtype=float)
    values, flags = [], []
    for sid, table in zip(SUBSYSTEMS, tables):
        v, clamped = interpolate(table, subsystem_project(r, sid))
        values.append(v)
        flags.append(clamped)
    return values, flags


def select_mode(r_next, tables, teb: TebBox, cfg: SwitchConfig, values=None) -> ControllerMode:
    """Safety as soon as any subsystem value enters the strip ``[V_bar + eps - margin, ...)``."""
    if values is None:
        values, _ = subsystem_values(r_next, tables)
    for v, v_bar in zip(values, teb.v_bar):
        if v >= v_bar + teb.epsilon - cfg.margin:
            return ControllerMode.SAFETY
    return ControllerMode.PERFORMANCE


def performance_control(r, grads, params: ModelParams, cfg: SwitchConfig) -> TrackerControl:
    if cfg.performance_kind is PerformanceKind.MIRROR:
        return safety_control(r, grads, params)
    r = np.asarray(r, dtype=float)
    k = cfg.gains
    p = params

    def attitude(xr, v, th, om):
        cmd = -(k.position * xr + k.velocity * v + k.attitude * th + k.rate * om)
        return float(np.clip(cmd, -p.a_max, p.a_max))

    ax = attitude(*r[0:4])
    ay = attitude(*r[4:8])
    lift = p.g - k.vertical_position * r[8] - k.vertical_velocity * r[9]
    az = float(np.clip(lift / p.kT, 0.0, p.az_max))
    return TrackerControl(ax, ay, az)
