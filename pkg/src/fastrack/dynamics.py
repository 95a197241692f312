"""Tracking, planning and relative models for the near-hover quadrotor.

States are plain float arrays. The 10D tracker layout groups each
positional axis with its attitude chain::

    index  0   1   2    3    4   5   6    7    8   9
    slot   x   vx  thx  wx   y   vy  thy  wy   z   vz

The relative state uses the same layout with the position slots replaced
by tracker-minus-planner positions, so the X4/Y4/Z2 subsystems are the
contiguous slices ``[0:4]``, ``[4:8]`` and ``[8:10]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple

import numpy as np

X, VX, THX, WX, Y, VY, THY, WY, Z, VZ = range(10)
POSITION_SLOTS = (X, Y, Z)
STATE_LABELS = ("x", "vx", "theta_x", "omega_x", "y", "vy", "theta_y", "omega_y", "z", "vz")

THETA_GUARD = 0.6


class ThetaGuardError(ValueError):
    """Raised when a pitch/roll angle leaves the region where tan is well conditioned."""


@dataclass(frozen=True)
class ModelParams:
    """Physical constants and input bounds of the 10D/3D model pair.

    ``a_max`` is stored in radians. Config files give it in degrees under
    ``a_max_deg``; :meth:`from_dict` converts once.
    """

    d0: float = 10.0
    d1: float = 8.0
    n0: float = 10.0
    kT: float = 0.91
    g: float = 9.81
    a_max: float = math.radians(10.0)
    az_max: float = 1.5 * 9.81
    b_max: float = 0.5
    d_max: float = 0.1

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"model parameter {f.name} must be positive and finite, got {value}")

    @property
    def hover_thrust(self) -> float:
        return self.g / self.kT

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        data = dict(data)
        if "a_max_deg" in data:
            if "a_max" in data:
                raise ValueError("give a_max or a_max_deg, not both")
            data["a_max"] = math.radians(data.pop("a_max_deg"))
        if "az_max_g" in data:
            data["az_max"] = data.pop("az_max_g") * data.get("g", cls.g)
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown model keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


class TrackerControl(NamedTuple):
    ax: float
    ay: float
    az: float

    def within(self, params: ModelParams, tol: float = 1e-12) -> bool:
        return (
            abs(self.ax) <= params.a_max + tol
            and abs(self.ay) <= params.a_max + tol
            and -tol <= self.az <= params.az_max + tol
        )


class PlannerControl(NamedTuple):
    bx: float
    by: float
    bz: float


class Disturbance(NamedTuple):
    dx: float
    dy: float
    dz: float


class SubsystemId(enum.Enum):
    """Decoupled per-axis pieces of the relative system."""

    X4 = "X4"
    Y4 = "Y4"
    Z2 = "Z2"

    @property
    def slots(self) -> slice:
        return _SUBSYSTEM_SLOTS[self]

    @property
    def labels(self) -> tuple[str, ...]:
        return STATE_LABELS[self.slots]

    @property
    def axis(self) -> int:
        """Index of the positional axis (0=x, 1=y, 2=z) this subsystem owns."""
        return ("X4", "Y4", "Z2").index(self.value)


_SUBSYSTEM_SLOTS = {
    SubsystemId.X4: slice(0, 4),
    SubsystemId.Y4: slice(4, 8),
    SubsystemId.Z2: slice(8, 10),
}


def tracking_state(**values: float) -> np.ndarray:
    """Build a 10D tracker state from named slots; omitted slots are zero."""
    s = np.zeros(10)
    for name, value in values.items():
        s[STATE_LABELS.index(name)] = value
    return s


def _require_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("state contains non-finite values")


def relative_state(s: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Relative state ``r = s - Q p``: tracker state with the planner position subtracted."""
    s = np.asarray(s, dtype=float)
    p = np.asarray(p, dtype=float)
    _require_finite(s, p)
    r = s.copy()
    r[list(POSITION_SLOTS)] -= p
    return r


def project_to_planner(s: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Planner position consistent with tracker state ``s`` and relative state ``r``."""
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    _require_finite(s, r)
    return (s - r)[list(POSITION_SLOTS)]


def position(s: np.ndarray) -> np.ndarray:
    return np.asarray(s, dtype=float)[list(POSITION_SLOTS)]


def _check_theta(s):
    if abs(s[THX]) >= THETA_GUARD or abs(s[THY]) >= THETA_GUARD:
        raise ThetaGuardError(
            f"attitude ({s[THX]:.4f}, {s[THY]:.4f}) rad outside the +/-{THETA_GUARD} rad guard"
        )


def tracking_derivative(s, u, d, params: ModelParams) -> np.ndarray:
    """Time derivative of the 10D near-hover quadrotor under control ``u`` and wind ``d``."""
    s = np.asarray(s, dtype=float)
    _check_theta(s)
    ax, ay, az = u
    dx, dy, dz = d
    p = params
    return np.array([
        s[VX] + dx,
        p.g * math.tan(s[THX]),
        -p.d1 * s[THX] + s[WX],
        -p.d0 * s[THX] + p.n0 * ax,
        s[VY] + dy,
        p.g * math.tan(s[THY]),
        -p.d1 * s[THY] + s[WY],
        -p.d0 * s[THY] + p.n0 * ay,
        s[VZ] + dz,
        p.kT * az - p.g,
    ])


def planner_derivative(up) -> np.ndarray:
    """The holonomic planner moves with its commanded velocity."""
    return np.asarray(up, dtype=float).copy()


def relative_derivative(r, u, up, d, params: ModelParams) -> np.ndarray:
    """Relative dynamics: tracker rates with the planner velocity removed from position rows."""
    rate = tracking_derivative(r, u, d, params)
    rate[list(POSITION_SLOTS)] -= np.asarray(up, dtype=float)
    return rate


def subsystem_project(r: np.ndarray, sid: SubsystemId) -> np.ndarray:
    return np.asarray(r, dtype=float)[sid.slots].copy()
