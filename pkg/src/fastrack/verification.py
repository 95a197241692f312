"""Empirical checks on solved tables: cost floor, reload integrity, invariance rollouts, gradient consistency."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ModelParams, SubsystemId
from .grid import GradientTable, ValueTable, gradient_tables, interpolate_many
from .solver import array_sha256

ROLLOUT_SLACK = 0.05


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str


def _position_cost(table: ValueTable) -> np.ndarray:
    pos = table.grid.axes[0]
    shape = (-1,) + (1,) * (table.grid.ndim - 1)
    return np.broadcast_to(np.abs(pos).reshape(shape), table.grid.shape)


def check_cost_floor(tables) -> SuiteResult:
    worst = min(float(np.min(t.values - _position_cost(t))) for t in tables)
    return SuiteResult("value_above_cost", worst >= -1e-12, f"min(V - l) = {worst:.3e}")


def check_reload(tables, reports) -> SuiteResult:
    bad = []
    for t, r in zip(tables, reports):
        if array_sha256(t.values) != r.table_sha256:
            bad.append(f"{t.subsystem}: values hash differs from report")
        if t.solver_hash != r.solver_hash:
            bad.append(f"{t.subsystem}: solver hash {t.solver_hash} != report {r.solver_hash}")
    return SuiteResult("reload_hash", not bad, "; ".join(bad) or "all table hashes match their reports")


def check_gradients(tables, grads, tol: float = 1e-12) -> SuiteResult:
    worst = 0.0
    for t, g in zip(tables, grads):
        fresh = gradient_tables(t)
        for a, b in zip(fresh.components, g.components):
            worst = max(worst, float(np.max(np.abs(a - b))))
    return SuiteResult("gradient_consistency", worst <= tol, f"max |stored - recomputed| = {worst:.3e}")


def _rates(sid: SubsystemId, x: np.ndarray, q: np.ndarray, p: ModelParams) -> np.ndarray:
    """Relative subsystem rates with tracker, planner and wind all playing their sign rules."""
    sign = lambda v: np.where(np.abs(v) <= 1e-9, 0.0, np.sign(v))  # noqa: E731
    push = (p.b_max + p.d_max) * sign(q[:, 0])
    if sid is SubsystemId.Z2:
        qz = p.kT * q[:, 1]
        az = np.where(np.abs(qz) <= 1e-9, p.hover_thrust, np.where(qz > 0, 0.0, p.az_max))
        return np.stack([x[:, 1] + push, p.kT * az - p.g], axis=1)
    a = -p.a_max * sign(q[:, 3])
    th = x[:, 2]
    return np.stack([x[:, 1] + push, p.g * np.tan(th), -p.d1 * th + x[:, 3], -p.d0 * th + p.n0 * a], axis=1)


def invariance_rollouts(sid: SubsystemId, table: ValueTable, grad: GradientTable, params: ModelParams,
                        epsilon: float = 0.01, starts: int = 100, duration: float = 10.0,
                        dt: float = 0.01, seed: int = 0):
    """Roll out the optimal game from random starts inside ``{V <= V_bar + eps}``.

    Controls are re-evaluated every ``dt`` and held over an RK4 step. Returns
    ``(rise, v0)`` where ``rise`` is the largest ``V(t) - V(r0)`` per start.
    """
    rng = np.random.default_rng(seed)
    grid = table.grid
    level = float(table.values.min()) + epsilon
    picked = []
    for _ in range(200):
        cand = rng.uniform(grid.lower, grid.upper, size=(4096, grid.ndim))
        v, _ = interpolate_many(grid, table.values, cand)
        picked.extend(cand[v <= level])
        if len(picked) >= starts:
            break
    else:
        raise ValueError(f"only {len(picked)} of {starts} random starts fell inside the level set {level:.4f}")
    x = np.array(picked[:starts])
    v0, _ = interpolate_many(grid, table.values, x)
    peak = v0.copy()

    def gradient(xs):
        return np.stack([interpolate_many(grid, c, xs)[0] for c in grad.components], axis=1)

    for _ in range(int(round(duration / dt))):
        q = gradient(x)
        f = lambda y: _rates(sid, y, q, params)  # noqa: E731 - inputs held over the step
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        v, _ = interpolate_many(grid, table.values, x)
        peak = np.maximum(peak, v)
    return peak - v0, v0


def check_invariance(tables, grads, params: ModelParams, epsilon: float, starts: int = 100) -> SuiteResult:
    details, ok = [], True
    for sid, t, g in zip((SubsystemId.X4, SubsystemId.Y4, SubsystemId.Z2), tables, grads):
        try:
            rise, _ = invariance_rollouts(sid, t, g, params, epsilon, starts)
        except ValueError as exc:
            ok = False
            details.append(f"{sid.value} {exc}")
            continue
        ok &= bool(rise.max() <= ROLLOUT_SLACK)
        details.append(f"{sid.value} max rise {rise.max():.4f}")
    return SuiteResult("invariance_rollouts", ok, ", ".join(details))
