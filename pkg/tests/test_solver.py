import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastrack.dynamics import ModelParams, SubsystemId
from fastrack.grid import GridSpec, ValueTable
from fastrack.solver import (
    CflError,
    SolverConfig,
    analytic_hamiltonian,
    cfl_dt,
    dissipation_alphas,
    double_integrator_spec,
    lf_step,
    solve,
    solve_decomposed,
    solver_hash,
    subsystem_spec,
    toy_spec,
)

P = ModelParams()


def x4_grid(n=31):
    return GridSpec.from_bounds(("xr", "vx", "theta_x", "omega_x"), (-2, -2, -0.35, -2), (2, 2, 0.35, 2), n)


def y4_grid(n=31):
    return GridSpec.from_bounds(("yr", "vy", "theta_y", "omega_y"), (-2, -2, -0.35, -2), (2, 2, 0.35, 2), n)


def z2_grid(n=21):
    return GridSpec.from_bounds(("zr", "vz"), (-2, -2), (2, 2), n)


def toy_grid(n=21, half=1.0):
    return GridSpec.from_bounds(("xr",), (-half,), (half,), n)


def test_hamiltonian_examples():
    assert analytic_hamiltonian(toy_spec(toy_grid()), [0.0], [2.0]) == pytest.approx(-0.8)
    x4 = subsystem_spec(SubsystemId.X4, x4_grid(5), P)
    assert analytic_hamiltonian(x4, np.zeros(4), [1, 0, 0, 0]) == pytest.approx(0.6)
    assert analytic_hamiltonian(x4, np.zeros(4), [0, 0, 0, 1]) == pytest.approx(-1.7453, abs=1e-4)


def test_hamiltonian_matches_enumeration():
    """The closed form equals min over tracker inputs of max over planner and wind, on a dense grid."""
    rng = np.random.default_rng(5)
    x4 = subsystem_spec(SubsystemId.X4, x4_grid(5), P)
    z2 = subsystem_spec(SubsystemId.Z2, z2_grid(), P)
    a_vals = np.linspace(-P.a_max, P.a_max, 201)
    az_vals = np.linspace(0, P.az_max, 201)
    push = [b + d for b in (-P.b_max, P.b_max) for d in (-P.d_max, P.d_max)]
    for _ in range(200):
        x = rng.uniform([-2, -2, -0.35, -2], [2, 2, 0.35, 2])
        q = rng.normal(size=4)
        drift = [x[1], P.g * np.tan(x[2]), -P.d1 * x[2] + x[3], -P.d0 * x[2]]
        worst = max(q[0] * w for w in push)
        brute = min(q[0] * drift[0] + worst + q[1] * drift[1] + q[2] * drift[2] + q[3] * (drift[3] + P.n0 * a)
                    for a in a_vals)
        assert analytic_hamiltonian(x4, x, q) == pytest.approx(brute, abs=1e-9)
        xz, qz = x[:2], q[:2]
        brute = min(qz[0] * xz[1] + worst + qz[1] * (P.kT * a - P.g) for a in az_vals)
        assert analytic_hamiltonian(z2, xz, qz) == pytest.approx(brute, abs=1e-9)


def test_dissipation_examples():
    assert dissipation_alphas(toy_spec(toy_grid()))[0] == pytest.approx(1.6)
    alphas = dissipation_alphas(subsystem_spec(SubsystemId.X4, x4_grid(5), P))
    assert alphas[0] == pytest.approx(2.6)
    assert alphas[1] == pytest.approx(9.81 * np.tan(0.35))
    assert alphas[1] == pytest.approx(3.581, abs=1e-3)


def test_cfl_examples():
    assert cfl_dt([1.6], toy_grid(21), 0.5) == pytest.approx(0.03125)
    assert cfl_dt([1.6], toy_grid(41), 0.5) == pytest.approx(0.03125 / 2)
    g2 = GridSpec.from_bounds(("a", "b"), (0, 0), (1, 1), 11)
    assert cfl_dt([1, 1], g2, 0.5) == pytest.approx(0.025)
    with pytest.raises(ValueError):
        cfl_dt([0.0], toy_grid(), 0.5)


def _toy_cost_table(n=21):
    spec = toy_spec(toy_grid(n))
    return spec, ValueTable(spec.grid, spec.cost.copy())


def test_lf_step_examples():
    spec, v = _toy_cost_table()
    dtau = 0.03125
    new = lf_step(v, spec, [1.6], dtau)
    assert new.values[15] == pytest.approx(0.5)
    assert new.values[10] == pytest.approx(dtau * 1.6)


def test_lf_step_rejects_cfl_violation():
    spec, v = _toy_cost_table()
    with pytest.raises(CflError):
        lf_step(v, spec, [1.6], 0.07)


def _interior(shape):
    return tuple(slice(1, n - 1) for n in shape)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.0, 3.0))
def test_lf_step_monotone_at_interior_nodes(seed, bump):
    rng = np.random.default_rng(seed)
    spec = double_integrator_spec(GridSpec.from_bounds(("xr", "v"), (-1, -1), (1, 1), (9, 11)))
    alphas = dissipation_alphas(spec)
    dtau = cfl_dt(alphas, spec.grid, 0.5)
    base = rng.normal(size=spec.grid.shape) + spec.cost
    raised = base.copy()
    raised.flat[rng.integers(spec.grid.total)] += bump
    lo = lf_step(ValueTable(spec.grid, base), spec, alphas, dtau).values
    hi = lf_step(ValueTable(spec.grid, raised), spec, alphas, dtau).values
    inner = _interior(spec.grid.shape)
    assert np.all(hi[inner] >= lo[inner] - 1e-12)


def test_boundary_nodes_are_not_monotone():
    """The duplicated one-sided difference weights the inner neighbour negatively at an edge node."""
    spec, v = _toy_cost_table()
    alphas = [1.6]
    raised = v.values.copy()
    raised[1] += 0.5
    lo = lf_step(v, spec, alphas, 0.03125).values
    hi = lf_step(ValueTable(spec.grid, raised), spec, alphas, 0.03125).values
    assert hi[0] < lo[0] or hi[0] == spec.cost[0]


def test_solution_dominates_cost_and_is_symmetric():
    spec = subsystem_spec(SubsystemId.X4, x4_grid(9), P)
    table, _, report = solve(spec, SolverConfig(max_steps=300))
    assert np.all(table.values >= spec.cost)
    assert report.steps == 300 and not report.converged
    assert np.max(np.abs(table.values - table.values[::-1, ::-1, ::-1, ::-1])) <= 1e-12


def test_interior_values_never_decrease_across_sweeps():
    spec = double_integrator_spec(GridSpec.from_bounds(("xr", "v"), (-2, -2), (2, 2), 21))
    alphas = dissipation_alphas(spec)
    dtau = cfl_dt(alphas, spec.grid, 0.5)
    v = ValueTable(spec.grid, spec.cost.copy())
    inner = _interior(spec.grid.shape)
    for _ in range(200):
        nxt = lf_step(v, spec, alphas, dtau)
        assert np.all(nxt.values >= spec.cost)
        v = nxt
    # across the whole run the interior only rises
    assert np.all(v.values[inner] >= spec.cost[inner])


def test_toy_converges_to_absolute_value():
    spec = toy_spec(toy_grid(101))
    table, _, report = solve(spec)
    assert report.converged
    assert np.max(np.abs(table.values - np.abs(spec.grid.axes[0]))) <= 0.1
    assert report.min_value == pytest.approx(float(table.values.min()))


def test_solver_hash_tracks_inputs():
    spec = toy_spec(toy_grid())
    base = solver_hash(spec, SolverConfig())
    assert base == solver_hash(toy_spec(toy_grid()), SolverConfig(epsilon=0.5))
    assert base != solver_hash(spec, SolverConfig(convergence_tol=1e-5))
    assert base != solver_hash(toy_spec(toy_grid(), u_max=2.0), SolverConfig())


def test_decomposed_reuses_identical_axis_problem():
    specs = [subsystem_spec(SubsystemId.X4, x4_grid(7), P), subsystem_spec(SubsystemId.Y4, y4_grid(7), P),
             subsystem_spec(SubsystemId.Z2, z2_grid(11), P)]
    cfg = SolverConfig(max_steps=100)
    tables, grads, reports = solve_decomposed(specs, cfg)
    assert np.array_equal(tables[0].values, tables[1].values)
    assert reports[1].reused_from == "X4"
    assert tables[1].solver_hash == solver_hash(specs[1], cfg) != tables[0].solver_hash
    assert [t.subsystem for t in tables] == ["X4", "Y4", "Z2"]
    with pytest.raises(ValueError):
        solve_decomposed(specs[:2], cfg)


def test_default_axis_tables_are_identical(default_run):
    x4, y4, z2 = default_run.tables
    assert np.array_equal(x4.values, y4.values)
    # the vertical and lateral bounds are recorded, their order is not asserted
    print(f"V_bar X4 {default_run.reports[0].min_value:.6f}, Z2 {default_run.reports[2].min_value:.6f}")


def test_default_axis_regression_baseline(default_run):
    """Pinned value from the first full solve on the default 31^4 axis grid."""
    assert default_run.reports[0].min_value == pytest.approx(2.3266299326, abs=1e-6)


def test_axis_max_change_settles_monotonically(default_run):
    deltas = np.asarray(default_run.reports[0].deltas)
    smooth = np.convolve(deltas, np.ones(50) / 50, mode="valid")
    rises = np.diff(smooth)
    assert np.all(rises <= 1e-12), f"smoothed change rises by up to {rises.max():.3e}"
