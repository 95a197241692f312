import math

import numpy as np
import pytest

from fastrack.dynamics import (
    STATE_LABELS,
    ModelParams,
    SubsystemId,
    ThetaGuardError,
    planner_derivative,
    project_to_planner,
    relative_derivative,
    relative_state,
    subsystem_project,
    tracking_derivative,
    tracking_state,
)

P = ModelParams()


def random_inputs(rng):
    s = rng.uniform(-3, 3, 10)
    s[[2, 6]] = rng.uniform(-0.5, 0.5, 2)
    p = rng.uniform(-5, 5, 3)
    u = (rng.uniform(-P.a_max, P.a_max), rng.uniform(-P.a_max, P.a_max), rng.uniform(0, P.az_max))
    up = tuple(rng.uniform(-P.b_max, P.b_max, 3))
    d = tuple(rng.uniform(-P.d_max, P.d_max, 3))
    return s, p, u, up, d


def test_defaults_and_unit_conversion():
    assert P.a_max == pytest.approx(0.17453, abs=1e-5)
    assert P.az_max == pytest.approx(14.715)
    parsed = ModelParams.from_dict({"a_max_deg": 10, "az_max_g": 1.5})
    assert parsed == P
    assert ModelParams.from_dict(P.to_dict()) == P


@pytest.mark.parametrize("bad", [{"d0": 0.0}, {"g": -1.0}, {"kT": float("nan")}, {"wings": 2}])
def test_model_params_rejects_bad_values(bad):
    with pytest.raises(ValueError):
        ModelParams.from_dict(bad)


def test_relative_state_identity_case():
    s = tracking_state(x=1, y=2, z=3)
    assert np.array_equal(relative_state(s, [1, 2, 3]), np.zeros(10))


def test_relative_state_component_arithmetic():
    r = relative_state(tracking_state(vx=1), [2, 0, 0])
    assert np.array_equal(r, tracking_state(x=-2, vx=1))


def test_relative_state_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(100):
        s, p, *_ = random_inputs(rng)
        assert np.allclose(project_to_planner(s, relative_state(s, p)), p, atol=1e-12)


def test_relative_state_rejects_non_finite():
    with pytest.raises(ValueError):
        relative_state(np.full(10, np.nan), [0, 0, 0])


def test_project_to_planner_examples():
    s = np.arange(10.0)
    assert np.array_equal(project_to_planner(s, s), np.zeros(3))
    s = tracking_state(x=5, z=1)
    r = tracking_state(x=0.3, z=-0.2)
    assert np.allclose(project_to_planner(s, r), [4.7, 0, 1.2])


def test_hover_is_a_fixed_point():
    rate = tracking_derivative(np.zeros(10), (0, 0, P.g / P.kT), (0, 0, 0), P)
    assert np.max(np.abs(rate)) <= 1e-12


def test_pitch_response():
    rate = tracking_derivative(tracking_state(theta_x=0.1), (0, 0, 0), (0, 0, 0), P)
    assert rate[1] == pytest.approx(9.81 * math.tan(0.1))
    assert rate[1] == pytest.approx(0.9843, abs=1e-4)
    assert rate[2] == pytest.approx(-0.8)
    assert rate[3] == pytest.approx(-1.0)


def test_wind_moves_position():
    rate = tracking_derivative(np.zeros(10), (0, 0, 0), (0.1, 0, 0), P)
    assert rate[0] == pytest.approx(0.1)


def test_theta_guard():
    with pytest.raises(ThetaGuardError):
        tracking_derivative(tracking_state(theta_y=0.6), (0, 0, 0), (0, 0, 0), P)


def test_relative_derivative_examples():
    rate = relative_derivative(tracking_state(vx=1), (0, 0, P.hover_thrust), (0.5, 0, 0), (0.1, 0, 0), P)
    assert rate[0] == pytest.approx(0.6)
    rate = relative_derivative(np.zeros(10), (0, 0, 0), (0, 0, 0), (0, 0, 0), P)
    expected = np.zeros(10)
    expected[9] = -9.81
    assert np.allclose(rate, expected, atol=1e-15)


def test_relative_derivative_matches_tracker_minus_planner():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        s, p, u, up, d = random_inputs(rng)
        rel = relative_derivative(relative_state(s, p), u, up, d, P)
        expected = tracking_derivative(s, u, d, P)
        expected[[0, 4, 8]] -= planner_derivative(up)
        assert np.max(np.abs(rel - expected)) <= 1e-12


def test_decomposition_soundness():
    """Each subsystem's rates ignore every slot and input outside it."""
    rng = np.random.default_rng(11)
    axis_inputs = {SubsystemId.X4: 0, SubsystemId.Y4: 1, SubsystemId.Z2: 2}
    for _ in range(50):
        s, p, u, up, d = random_inputs(rng)
        r = relative_state(s, p)
        base = relative_derivative(r, u, up, d, P)
        for sid, k in axis_inputs.items():
            other = np.ones(10, dtype=bool)
            other[sid.slots] = False
            r2 = r.copy()
            r2[other] = rng.uniform(-0.5, 0.5, other.sum())
            u2, up2, d2 = list(u), list(up), list(d)
            for j in range(3):
                if j != k:
                    u2[j] = rng.uniform(0, P.a_max)
                    up2[j] = rng.uniform(-P.b_max, P.b_max)
                    d2[j] = rng.uniform(-P.d_max, P.d_max)
            moved = relative_derivative(r2, u2, up2, d2, P)
            assert np.array_equal(moved[sid.slots], base[sid.slots])


def test_subsystem_project_examples():
    r = tracking_state(x=1, omega_x=2)
    assert np.array_equal(subsystem_project(r, SubsystemId.X4), [1, 0, 0, 2])
    assert np.array_equal(subsystem_project(np.zeros(10), SubsystemId.Z2), [0, 0])


def test_subsystems_partition_the_state():
    r = np.arange(10.0) + 1
    pieces = np.concatenate([subsystem_project(r, sid) for sid in SubsystemId])
    assert sorted(pieces) == sorted(r)
    labels = sum((sid.labels for sid in SubsystemId), ())
    assert sorted(labels) == sorted(STATE_LABELS)
