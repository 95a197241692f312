"""Worst-case tracking-error value functions on subsystem grids.

The value of the pursuit-evasion game is the largest cost the adversary can
force over time. It is computed as a pseudo-time dynamic programming sweep::

    V_0     = l
    V_{k+1} = max(l, V_k + dtau * H_hat(V_k))

where ``H_hat`` is the Lax-Friedrichs numerical Hamiltonian: the analytic
Hamiltonian at the averaged one-sided slopes plus dissipation
``alpha_i/2 * (q+ - q-)`` with a global per-dimension ``alpha``. Boundary
nodes duplicate the single available one-sided difference.

The dissipation acts like a small diffusion. Combined with the freeze at
``l`` it lets values creep upward slowly for as long as the sweep runs, so the
returned table depends on where the quiet-step rule stops it.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .dynamics import ModelParams, SubsystemId
from .games import DoubleIntegratorGame, Game, ScalarToyGame, game_for
from .grid import GridSpec, GradientTable, ValueTable, gradient_tables


class CflError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    cfl_factor: float = 0.5
    convergence_tol: float = 1e-4
    quiet_steps: int = 10
    max_steps: int = 200_000
    epsilon: float = 0.01

    def __post_init__(self):
        if not 0 < self.cfl_factor < 1:
            raise ValueError(f"cfl_factor must lie in (0, 1), got {self.cfl_factor}")
        if self.convergence_tol <= 0 or self.epsilon < 0:
            raise ValueError("convergence_tol must be positive and epsilon non-negative")
        if self.quiet_steps < 1 or self.max_steps < 1:
            raise ValueError("quiet_steps and max_steps must be at least 1")

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SubsystemSpec:
    """One decoupled game on its grid. ``cost`` is ``|position|`` at every node."""

    id: str
    grid: GridSpec
    game: Game
    params: ModelParams | None = None
    cost: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.game.labels) != self.grid.ndim:
            raise ValueError(f"game {type(self.game).__name__} needs {len(self.game.labels)} dimensions")
        pos = self.grid.axes[0]
        shape = (-1,) + (1,) * (self.grid.ndim - 1)
        self.cost = np.broadcast_to(np.abs(pos).reshape(shape), self.grid.shape).copy()

    def hamiltonian(self, state, costate) -> float:
        state = np.asarray(state, dtype=float)
        costate = np.asarray(costate, dtype=float)
        return float(self.game.hamiltonian(tuple(state), costate))


def subsystem_spec(sid: SubsystemId, grid: GridSpec, params: ModelParams | None = None) -> SubsystemSpec:
    params = params or ModelParams()
    return SubsystemSpec(sid.value, grid, game_for(sid, params), params)


def toy_spec(grid: GridSpec, u_max=1.0, b_max=0.5, d_max=0.1) -> SubsystemSpec:
    return SubsystemSpec("toy1d", grid, ScalarToyGame(u_max, b_max, d_max))


def double_integrator_spec(grid: GridSpec, u_max=1.0, b_max=0.5, d_max=0.1) -> SubsystemSpec:
    return SubsystemSpec("double_integrator", grid, DoubleIntegratorGame(u_max, b_max, d_max))


@dataclass
class ConvergenceReport:
    subsystem: str
    steps: int
    final_delta: float
    pseudo_time: float
    converged: bool
    min_value: float
    dtau: float
    solver_hash: str
    table_sha256: str = ""
    wall_time: float = 0.0
    reused_from: str | None = None
    deltas: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ConvergenceReport":
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def analytic_hamiltonian(spec: SubsystemSpec, state, costate) -> float:
    return spec.hamiltonian(state, costate)


def dissipation_alphas(spec: SubsystemSpec) -> np.ndarray:
    return spec.game.alphas(spec.grid.mesh())


def cfl_dt(alphas, grid: GridSpec, cfl_factor: float) -> float:
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas <= 0):
        raise ValueError(f"alphas must be positive, got {alphas}")
    return float(cfl_factor / np.sum(alphas / grid.spacing))


def solver_hash(spec: SubsystemSpec, cfg: SolverConfig) -> str:
    """Stable fingerprint of everything that determines the solved table."""
    key = {
        "game": spec.game.cache_key(),
        "grid": spec.grid.to_dict(),
        "solver": {k: v for k, v in cfg.to_dict().items() if k != "epsilon"},
    }
    return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:16]


def array_sha256(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values, dtype="<f8").tobytes()).hexdigest()


@numba.njit(cache=True)
def _sweep(v, out, cost, drift, spread, alpha, dx, shape, strides, dtau):
    """One update over every node; returns the largest absolute change."""
    ndim = shape.shape[0]
    worst = 0.0
    counter = np.zeros(ndim, dtype=np.int64)
    for idx in range(v.shape[0]):
        h = 0.0
        vc = v[idx]
        for i in range(ndim):
            s = strides[i]
            j = counter[i]
            if j == 0:
                qp = (v[idx + s] - vc) / dx[i]
                qm = qp
            elif j == shape[i] - 1:
                qm = (vc - v[idx - s]) / dx[i]
                qp = qm
            else:
                qm = (vc - v[idx - s]) / dx[i]
                qp = (v[idx + s] - vc) / dx[i]
            qa = 0.5 * (qm + qp)
            h += drift[i, idx] * qa + spread[i] * abs(qa) + 0.5 * alpha[i] * (qp - qm)
        nv = vc + dtau * h
        if nv < cost[idx]:
            nv = cost[idx]
        out[idx] = nv
        d = abs(nv - vc)
        if d > worst:
            worst = d
        # row-major multi-index of the next node
        i = ndim - 1
        counter[i] += 1
        while i > 0 and counter[i] == shape[i]:
            counter[i] = 0
            i -= 1
            counter[i] += 1
    return worst


class _Stepper:
    """Flattened buffers reused across sweeps of one subsystem."""

    def __init__(self, spec: SubsystemSpec, alphas):
        grid = spec.grid
        mesh = grid.mesh()
        self.shape = np.asarray(grid.shape, dtype=np.int64)
        self.strides = np.array([int(np.prod(grid.shape[i + 1:])) for i in range(grid.ndim)], dtype=np.int64)
        self.drift = np.stack([
            np.broadcast_to(spec.game.drift(i, mesh), grid.shape).ravel() for i in range(grid.ndim)
        ]).astype(np.float64)
        self.spread = np.asarray(spec.game.spread, dtype=np.float64)
        self.alpha = np.asarray(alphas, dtype=np.float64)
        self.dx = grid.spacing.astype(np.float64)
        self.cost = spec.cost.ravel().astype(np.float64)

    def __call__(self, v, out, dtau):
        return _sweep(v, out, self.cost, self.drift, self.spread, self.alpha, self.dx,
                      self.shape, self.strides, dtau)


def _check_cfl(alphas, grid, dtau):
    limit = cfl_dt(alphas, grid, 1.0)
    if not 0 < dtau <= limit * (1 + 1e-12):
        raise CflError(f"pseudo-time step {dtau} violates the stability limit {limit}")


def lf_step(V: ValueTable, spec: SubsystemSpec, alphas, dtau: float) -> ValueTable:
    """Single monotone update ``max(l, V + dtau * H_hat)`` returned as a new table."""
    _check_cfl(alphas, spec.grid, dtau)
    out = np.empty(spec.grid.total)
    _Stepper(spec, alphas)(V.flat.astype(np.float64), out, dtau)
    return ValueTable(spec.grid, out, V.subsystem, V.solver_hash, False)


def solve(spec: SubsystemSpec, cfg: SolverConfig = SolverConfig(), progress=None):
    """Iterate from ``V = l`` until the change stays below tolerance for ``quiet_steps`` sweeps.

    Returns ``(ValueTable, GradientTable, ConvergenceReport)``. When
    ``max_steps`` runs out the partial table is returned with ``converged=False``.
    """
    started = time.perf_counter()
    alphas = dissipation_alphas(spec)
    dtau = cfg.cfl_factor * cfl_dt(alphas, spec.grid, 1.0)
    stepper = _Stepper(spec, alphas)
    v = stepper.cost.copy()
    out = np.empty_like(v)
    quiet, steps, delta, converged = 0, 0, np.inf, False
    deltas = []
    while steps < cfg.max_steps:
        delta = stepper(v, out, dtau)
        v, out = out, v
        steps += 1
        deltas.append(float(delta))
        quiet = quiet + 1 if delta < cfg.convergence_tol else 0
        if progress is not None and steps % 500 == 0:
            progress(steps, delta, float(v.min()))
        if quiet >= cfg.quiet_steps:
            converged = True
            break
    shash = solver_hash(spec, cfg)
    table = ValueTable(spec.grid, v, spec.id, shash, converged)
    report = ConvergenceReport(
        subsystem=spec.id,
        steps=steps,
        final_delta=float(delta),
        pseudo_time=steps * dtau,
        converged=converged,
        min_value=float(v.min()),
        dtau=dtau,
        solver_hash=shash,
        table_sha256=array_sha256(table.values),
        wall_time=time.perf_counter() - started,
        deltas=deltas,
    )
    return table, gradient_tables(table), report


def solve_decomposed(specs, cfg: SolverConfig = SolverConfig(), progress=None):
    """Solve X4, Y4 and Z2; Y4 reuses the X4 result when its game and grid are identical."""
    by_id = {s.id: s for s in specs}
    missing = {sid.value for sid in SubsystemId} - set(by_id)
    if missing:
        raise ValueError(f"decomposed solve needs X4, Y4 and Z2; missing {sorted(missing)}")
    tables, grads, reports = {}, {}, {}
    for sid in ("X4", "Y4", "Z2"):
        spec = by_id[sid]
        x4 = by_id["X4"]
        if sid == "Y4" and _same_problem(spec, x4):
            t, g, r = tables["X4"], grads["X4"], reports["X4"]
            shash = solver_hash(spec, cfg)
            tables[sid] = ValueTable(spec.grid, t.values.copy(), sid, shash, t.converged)
            grads[sid] = GradientTable(spec.grid, g.components, sid, shash, g.converged)
            reports[sid] = ConvergenceReport(**{**r.to_dict(), "subsystem": sid, "solver_hash": shash,
                                                "reused_from": "X4"})
            continue
        tables[sid], grads[sid], reports[sid] = solve(spec, cfg, progress)
    order = [s.value for s in SubsystemId]
    return [tables[k] for k in order], [grads[k] for k in order], [reports[k] for k in order]


def _same_problem(a: SubsystemSpec, b: SubsystemSpec) -> bool:
    same_grid = [(d.min, d.max, d.count) for d in a.grid.dims] == [(d.min, d.max, d.count) for d in b.grid.dims]
    return same_grid and a.game.cache_key() == b.game.cache_key()
