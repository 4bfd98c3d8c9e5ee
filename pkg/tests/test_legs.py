import numpy as np
import pytest

from jumpmpc.legs import (
    DLS_DAMPING,
    LegGeometry,
    force_to_torque,
    is_singular,
    leg_fk,
    leg_ik,
    leg_jacobian,
    pd_torque,
    torque_to_force,
)

GEOM = LegGeometry()


def test_fk_fully_extended_downward():
    np.testing.assert_allclose(leg_fk(0.0, 0.0), [0.0, -0.4], atol=1e-15)


def test_fk_knee_right_angle_distance():
    foot = leg_fk(0.3, np.pi / 2)
    assert np.linalg.norm(foot) == pytest.approx(np.sqrt(0.2**2 + 0.2**2), abs=1e-12)


def test_fk_ik_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        q = np.array([rng.uniform(-1.2, 1.2), rng.uniform(0.15, np.pi - 0.15)])
        foot = leg_fk(q[0], q[1])
        q_back = leg_ik(foot)
        np.testing.assert_allclose(q_back, q, atol=1e-9)
        np.testing.assert_allclose(leg_fk(q_back[0], q_back[1]), foot, atol=1e-9)


def test_ik_rejects_unreachable():
    with pytest.raises(ValueError):
        leg_ik(np.array([0.0, -0.5]))  # beyond full extension
    with pytest.raises(ValueError):
        leg_ik(np.array([0.02, 0.0]), LegGeometry(l1=0.25, l2=0.15))  # inside the annulus


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(1)
    h = 1e-7
    for _ in range(100):
        q = rng.uniform(-1.5, 1.5, size=2)
        J = leg_jacobian(q[0], q[1])
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fd = (leg_fk(*(q + e)) - leg_fk(*(q - e))) / (2 * h)
            np.testing.assert_allclose(J[:, j], fd, atol=1e-7)


def test_jacobian_singular_when_extended():
    J = leg_jacobian(0.4, 0.0)
    assert abs(np.linalg.det(J)) < 1e-12
    assert is_singular(0.4, 0.0)
    assert not is_singular(0.0, 1.0)


def test_jacobian_scales_with_links():
    q = (0.2, 0.9)
    J1 = leg_jacobian(*q, LegGeometry(l1=0.2, l2=0.2))
    J2 = leg_jacobian(*q, LegGeometry(l1=0.4, l2=0.4))
    np.testing.assert_allclose(J2, 2.0 * J1, atol=1e-15)


def test_pd_law():
    kp = np.full(4, 300.0)
    kd = np.full(4, 3.0)
    q = np.zeros(4)
    assert np.all(pd_torque(q, q, q, q, kp, kd) == 0.0)
    e = np.array([0.1, -0.2, 0.0, 0.05])
    np.testing.assert_allclose(pd_torque(q + e, q, q, q, kp, np.zeros(4)), 300.0 * e)
    assert pd_torque(q + e, q, q, q, kp, kd)[0] > 0.0
    with pytest.raises(ValueError):
        pd_torque(q, q, q, q, -kp, kd)


def test_force_torque_roundtrip():
    rng = np.random.default_rng(2)
    for _ in range(200):
        q = np.array([rng.uniform(-1.0, 1.0), rng.uniform(0.3, 2.6)])
        phi = rng.uniform(-0.5, 0.5)
        f = rng.uniform(-100, 100, size=2)
        tau = force_to_torque(f, q, phi)
        f_back, flagged = torque_to_force(tau, q, phi)
        assert not flagged
        np.testing.assert_allclose(f_back, f, atol=1e-9)


def test_torque_to_force_identity_rotation():
    q = np.array([0.1, 1.2])
    tau = np.array([3.0, -1.0])
    f, flagged = torque_to_force(tau, q, 0.0)
    assert not flagged
    J = leg_jacobian(q[0], q[1])
    np.testing.assert_allclose(J.T @ f, tau, atol=1e-12)


def test_damped_inverse_bounded_at_singularity():
    q = np.array([0.2, 0.0])  # extended leg
    tau = np.array([5.0, 2.0])
    f, flagged = torque_to_force(tau, q, 0.0)
    assert flagged
    assert np.all(np.isfinite(f))
    assert np.linalg.norm(f) <= np.linalg.norm(tau) / DLS_DAMPING
