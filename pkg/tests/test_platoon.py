import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdeeplcc.platoon import (
    CollisionError,
    OvmParams,
    PlatoonState,
    build_model,
    desired_velocity,
    deviation_state,
    equilibrium_spacing,
    equilibrium_state,
    linearize,
    ovm_acceleration,
    step_linear,
    step_nonlinear,
)

P = OvmParams()


def test_equilibrium_spacing_closed_form():
    assert equilibrium_spacing(P, 15.0) == pytest.approx(20.0, abs=1e-12)
    with pytest.raises(ValueError):
        equilibrium_spacing(P, 30.0)
    with pytest.raises(ValueError):
        equilibrium_spacing(P, 0.0)


def test_desired_velocity_saturates():
    assert desired_velocity(P, 4.0) == 0.0
    assert desired_velocity(P, 40.0) == 30.0
    assert desired_velocity(P, 20.0) == pytest.approx(15.0)


def test_params_validation():
    with pytest.raises(ValueError):
        OvmParams(s_min=10, s_max=5)
    with pytest.raises(ValueError):
        OvmParams(alpha=0.0)


def test_linearization_coefficients():
    A, B, H = linearize((P,) * 3, 15.0)
    gamma1 = 0.6 * math.pi / 2
    assert abs(A[3, 2] - gamma1) < 1e-12
    assert A[3, 3] == pytest.approx(-(0.6 + 0.9))
    assert A[3, 1] == pytest.approx(0.9)
    # the CAV row is input driven
    assert B[1, 0] == 1.0 and np.all(A[1] == 0.0)
    assert H[0, 0] == 1.0


def test_discrete_model_is_euler(model):
    np.testing.assert_allclose(model.A, np.eye(6) + 0.1 * model.A_con)
    np.testing.assert_allclose(model.B, 0.1 * model.B_con)


def test_equilibrium_is_fixed_point(model):
    st0 = equilibrium_state(model)
    st1 = step_nonlinear(st0, 0.0, 15.0, None, 0.1, model.params)
    x, eps = deviation_state(st1, model.s_star, 15.0)
    np.testing.assert_allclose(x, 0.0, atol=1e-12)
    assert eps == 0.0
    s = st0.spacings[0]
    assert ovm_acceleration(P, s, 0.0, 15.0) == pytest.approx(0.0, abs=1e-12)


def test_collision_detected(model):
    st0 = PlatoonState(np.array([0.0, -0.1, -20.0, -40.0]), np.array([0.0, 10.0, 15.0, 15.0]))
    with pytest.raises(CollisionError) as err:
        step_nonlinear(st0, 0.0, 0.0, None, 0.1, model.params)
    assert err.value.vehicle == 1


def test_state_validation():
    with pytest.raises(ValueError):
        PlatoonState(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        PlatoonState(np.array([0.0, np.nan]), np.zeros(2))


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.lists(st.floats(-0.2, 0.2), min_size=6, max_size=6))
def test_nonlinear_step_matches_linear_model_near_equilibrium(u, eps, x0):
    """Small deviations: nonlinear and linearized one-step maps agree to second order."""
    model = build_model()
    x0 = np.array(x0)
    pos = -np.concatenate([[0.0], np.cumsum(model.s_star + x0[0::2])])
    vel = np.concatenate([[15.0 + eps], 15.0 + x0[1::2]])
    st1 = step_nonlinear(PlatoonState(pos, vel), u, 15.0, None, 0.1, model.params)
    x1, _ = deviation_state(st1, model.s_star, 15.0)
    np.testing.assert_allclose(x1, step_linear(model, x0, u, eps), atol=5e-3)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.0, 29.0))
def test_equilibrium_velocity_inverse(v):
    assert float(desired_velocity(P, equilibrium_spacing(P, v))) == pytest.approx(v, rel=1e-10)


def test_ovm_acceleration_examples():
    assert ovm_acceleration(P, 15.0, 0.0, 0.0) == pytest.approx(4.5)
    assert ovm_acceleration(P, 4.0, 0.0, 0.0) == 0.0
    assert equilibrium_spacing(P, 7.5) == pytest.approx(15.0, abs=1e-12)


def test_linearization_structure():
    A, B, H = linearize((P,) * 3, 15.0)
    assert B[:, 0].tolist() == [0, 1, 0, 0, 0, 0]
    assert H[:, 0].tolist() == [1, 0, 0, 0, 0, 0]
    assert A[3, 3] == pytest.approx(-1.5) and A[5, 3] == pytest.approx(0.9)
    # spacing rows: s_i' = v_{i-1} - v_i
    assert A[2, 1] == 1.0 and A[2, 3] == -1.0


def test_discretize_examples(model):
    from rdeeplcc.platoon import discretize

    A, B, H = discretize(model.A_con, model.B_con, model.H_con, 1e-9)
    np.testing.assert_allclose(A, np.eye(6), atol=1e-8)
    assert np.abs(B).max() < 1e-8
    assert model.A[3, 2] == pytest.approx(0.1 * 0.6 * math.pi / 2, abs=1e-12)


def test_all_hdv_linear_model_is_schur(model):
    # the CAV row driven by the linearized OVM law instead of u
    g1 = 0.6 * math.pi / 2
    A = model.A + model.B @ np.array([[g1, -1.5, 0, 0, 0, 0]])
    assert np.abs(np.linalg.eigvals(A)).max() < 1
    x = np.full(6, 0.5)
    norms = []
    for _ in range(300):
        x = A @ x
        norms.append(np.abs(x).max())
    assert max(norms) < 10


def test_zero_dt_keeps_state(model):
    st0 = PlatoonState(np.array([0.0, -19.0, -40.0, -61.0]), np.array([15.0, 14.0, 15.5, 15.0]))
    st1 = step_nonlinear(st0, 1.0, 15.0, None, 0.0, model.params)
    np.testing.assert_array_equal(st1.positions, st0.positions)
    np.testing.assert_array_equal(st1.velocities[1:], st0.velocities[1:])


def test_one_step_hand_evaluation():
    # one HDV behind a CAV-free head: vehicle 1 is the CAV, so use vehicle 2's HDV law
    model = build_model()
    pos = np.array([0.0, -20.0, -38.0, -58.0])
    vel = np.array([15.0, 14.0, 15.0, 15.0])
    st1 = step_nonlinear(PlatoonState(pos, vel), 0.0, 14.0, None, 0.1, model.params)
    F = ovm_acceleration(P, 18.0, 14.0 - 15.0, 15.0)
    assert st1.velocities[2] == pytest.approx(15.0 + 0.1 * F, abs=1e-12)
    # head decelerated by 1 m/s
    assert st1.velocities[0] == 14.0


def test_fixed_point_over_100_steps(model):
    st0 = equilibrium_state(model)
    for _ in range(100):
        st0 = step_nonlinear(st0, 0.0, 15.0, None, 0.1, model.params)
    x, _ = deviation_state(st0, model.s_star, 15.0)
    assert np.abs(x).max() < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-0.01, 0.01), min_size=6, max_size=6))
def test_linear_and_nonlinear_agree_over_50_steps(x0):
    model = build_model()
    x_lin = np.array(x0)
    pos = -np.concatenate([[0.0], np.cumsum(model.s_star + x_lin[0::2])])
    vel = np.concatenate([[15.0], 15.0 + x_lin[1::2]])
    state = PlatoonState(pos, vel)
    for _ in range(50):
        state = step_nonlinear(state, 0.0, 15.0, None, 0.1, model.params)
        x_lin = step_linear(model, x_lin, 0.0, 0.0)
    x_nl, _ = deviation_state(state, model.s_star, 15.0)
    assert np.abs(x_nl - x_lin).max() < 1e-3
