import numpy as np
import pytest

from jumpmpc import srbd
from jumpmpc.srbd import (
    ControlInput,
    FootPositions,
    RigidBodyParams,
    RobotState,
    continuous_matrices,
    discretize,
    nominal_step,
    residual_step,
    torque_2d,
)


def test_torque_row_hand_value():
    # [r_z, -r_x] / J convention, hand-evaluated
    params = RigidBodyParams(m=10.0, J=0.056)
    feet = FootPositions(np.array([0.15, -0.25]), np.array([-0.15, -0.25]))
    _, B_ct = continuous_matrices(params, feet)
    np.testing.assert_allclose(
        B_ct[srbd.IOM, :2], [-0.25 / 0.056, -0.15 / 0.056], rtol=0, atol=1e-15
    )
    np.testing.assert_allclose(
        B_ct[srbd.IOM, 2:], [-0.25 / 0.056, 0.15 / 0.056], rtol=0, atol=1e-15
    )


def test_zero_moment_arm_zero_torque_rows():
    params = RigidBodyParams(m=5.0, J=0.1)
    _, B_ct = continuous_matrices(params, FootPositions())
    assert np.all(B_ct[srbd.IOM] == 0.0)


def test_A_ct_independent_of_feet():
    params = RigidBodyParams()
    A1, _ = continuous_matrices(params, FootPositions(np.array([0.2, -0.3]), np.array([-0.1, -0.2])))
    A2, _ = continuous_matrices(params, FootPositions(np.array([-0.4, 0.1]), np.array([0.3, 0.0])))
    np.testing.assert_array_equal(A1, A2)


def test_closed_form_structure_random():
    # A and B match the closed form entrywise for random params/feet/dt
    rng = np.random.default_rng(0)
    for _ in range(1000):
        m = rng.uniform(0.5, 50.0)
        J = rng.uniform(0.01, 2.0)
        r = rng.uniform(-0.5, 0.5, size=4)
        dt = rng.uniform(1e-4, 0.2)
        model = discretize(RigidBodyParams(m=m, J=J), r, dt)

        A_exp = np.eye(7)
        A_exp[srbd.IPX, srbd.IVX] = dt
        A_exp[srbd.IPZ, srbd.IVZ] = dt
        A_exp[srbd.IPHI, srbd.IOM] = dt
        A_exp[srbd.IVZ, srbd.IG] = -dt
        np.testing.assert_array_equal(model.A, A_exp)

        B_exp = np.zeros((7, 4))
        B_exp[srbd.IVX, 0] = dt / m
        B_exp[srbd.IVZ, 1] = dt / m
        B_exp[srbd.IVX, 2] = dt / m
        B_exp[srbd.IVZ, 3] = dt / m
        B_exp[srbd.IOM] = [r[1] / J * dt, -r[0] / J * dt, r[3] / J * dt, -r[2] / J * dt]
        np.testing.assert_allclose(model.B, B_exp, rtol=4 * np.finfo(float).eps, atol=0)


def test_discretize_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        discretize(RigidBodyParams(), FootPositions(), 0.0)
    with pytest.raises(ValueError):
        discretize(RigidBodyParams(), FootPositions(), -0.01)


def test_position_velocity_coupling_at_table_dt():
    model = discretize(RigidBodyParams(), FootPositions(), 0.025)
    assert model.A[0, 3] == 0.025


def test_dt_affine_scaling():
    params = RigidBodyParams()
    feet = FootPositions(np.array([0.1, -0.3]), np.array([-0.1, -0.3]))
    m1 = discretize(params, feet, 0.025)
    m4 = discretize(params, feet, 0.100)
    off1 = m1.A - np.eye(7)
    off4 = m4.A - np.eye(7)
    np.testing.assert_allclose(off4, 4.0 * off1, atol=1e-15)
    np.testing.assert_allclose(m4.B, 4.0 * m1.B, atol=1e-15)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        RigidBodyParams(m=-1.0)
    with pytest.raises(ValueError):
        RigidBodyParams(J=0.0)


def test_hover_equilibrium():
    params = RigidBodyParams(m=10.0, J=0.056)
    feet = FootPositions(np.array([0.15, -0.25]), np.array([-0.15, -0.25]))
    model = discretize(params, feet, 0.025)
    x = RobotState().as_vector()
    half = 10.0 * srbd.GRAVITY / 2.0
    u = ControlInput(np.array([0.0, half]), np.array([0.0, half])).as_vector()
    x_next = nominal_step(model, x, u)
    np.testing.assert_allclose(x_next[srbd.IVX:srbd.IOM + 1], 0.0, atol=1e-12)
    assert x_next[srbd.IG] == x[srbd.IG]


def test_free_fall():
    model = discretize(RigidBodyParams(), FootPositions(), 0.025)
    x = RobotState().as_vector()
    x_next = nominal_step(model, x, np.zeros(4))
    assert x_next[srbd.IVZ] == pytest.approx(-srbd.GRAVITY * 0.025)
    np.testing.assert_allclose(x_next[[srbd.IPX, srbd.IPZ, srbd.IPHI]], 0.0, atol=0)


def test_kinematic_integration():
    model = discretize(RigidBodyParams(), FootPositions(), 0.025)
    x = RobotState(v_x=1.0).as_vector()
    x_next = nominal_step(model, x, np.zeros(4))
    assert x_next[srbd.IPX] == pytest.approx(0.025)


def test_residual_zero_equals_nominal():
    model = discretize(RigidBodyParams(), FootPositions(np.array([0.1, -0.2]), np.array([-0.1, -0.2])), 0.025)
    rng = np.random.default_rng(3)
    x = rng.normal(size=7)
    u = rng.normal(size=4)
    np.testing.assert_array_equal(
        residual_step(model, x, u, np.zeros(3), np.zeros((3, 4))),
        nominal_step(model, x, u),
    )


def test_residual_G_inert_when_u_zero():
    model = discretize(RigidBodyParams(), FootPositions(), 0.100)
    x = RobotState(p_z=0.5, v_x=1.0).as_vector()
    G = np.random.default_rng(1).normal(size=(3, 4))
    np.testing.assert_array_equal(
        residual_step(model, x, np.zeros(4), np.zeros(3), G),
        residual_step(model, x, np.zeros(4), np.zeros(3), np.zeros((3, 4))),
    )


def test_residual_direct_substitution():
    model = discretize(RigidBodyParams(), FootPositions(), 0.025)
    x = RobotState().as_vector()
    x_next = residual_step(model, x, np.zeros(4), np.array([0.1, 0.0, 0.0]), np.zeros((3, 4)))
    assert x_next[srbd.IVX] == pytest.approx(0.0025)
    # no direct residual on positions or gravity
    np.testing.assert_allclose(x_next[[srbd.IPX, srbd.IPZ, srbd.IPHI]], 0.0, atol=0)
    assert x_next[srbd.IG] == srbd.GRAVITY


def test_superposition_on_nongravity_components():
    # linearity holds on the 6 dynamic components once the single gravity
    # contribution is accounted for
    params = RigidBodyParams(m=8.0, J=0.07)
    feet = FootPositions(np.array([0.12, -0.22]), np.array([-0.14, -0.25]))
    model = discretize(params, feet, 0.025)
    rng = np.random.default_rng(7)
    for _ in range(50):
        x1, x2 = rng.normal(size=7), rng.normal(size=7)
        g = srbd.GRAVITY
        x1[srbd.IG] = x2[srbd.IG] = g
        u1, u2 = rng.normal(size=4), rng.normal(size=4)
        x_sum = x1 + x2
        x_sum[srbd.IG] = g  # states share one gravity constant
        lhs = nominal_step(model, x_sum, u1 + u2)
        rhs = nominal_step(model, x1, u1) + nominal_step(model, x2, u2)
        # rhs double-counts the gravity pull and the constant component
        rhs[srbd.IVZ] += g * model.dt
        rhs[srbd.IG] -= g
        np.testing.assert_allclose(lhs[:6], rhs[:6], atol=1e-12)


def test_torque_sign_against_cross_product_oracle():
    params = RigidBodyParams(m=10.0, J=0.056)
    rng = np.random.default_rng(11)
    for _ in range(200):
        r = rng.uniform(-0.4, 0.4, size=4)
        u = rng.uniform(-100, 100, size=4)
        _, B_ct = continuous_matrices(params, r)
        omdot = B_ct[srbd.IOM] @ u
        tau = torque_2d(r[:2], u[:2]) + torque_2d(r[2:], u[2:])
        assert omdot == pytest.approx(tau / params.J, rel=1e-12)

    # vertical upward force ahead of the CoM pitches the body down
    _, B_ct = continuous_matrices(params, np.array([0.2, 0.0, 0.0, 0.0]))
    omdot = B_ct[srbd.IOM] @ np.array([0.0, 50.0, 0.0, 0.0])
    assert omdot < 0.0


def test_state_roundtrip():
    x = np.arange(7.0)
    assert np.array_equal(RobotState.from_vector(x).as_vector(), x)
    r = np.arange(4.0)
    assert np.array_equal(FootPositions.from_vector(r).as_vector(), r)
    assert np.array_equal(ControlInput.from_vector(r).as_vector(), r)
