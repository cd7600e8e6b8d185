import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from astroland import controller as ctl
from astroland.guidance import TrajectoryCommand
from astroland.rigid_body import DumbbellParams, SpacecraftState
from astroland.so3 import axis_angle, expm, hat

PARAMS = DumbbellParams.symmetric(500.0, 3.0, 0.5)
GAINS = ctl.select_gains(PARAMS)

unit_axes = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda a: np.linalg.norm(a) > 0.1).map(
    lambda a: np.array(a) / np.linalg.norm(a))


def command(R_d=None, Om_d=(0, 0, 0), Om_d_dot=(0, 0, 0), x_d=(0, 0, 0), v_d=(0, 0, 0), a_d=(0, 0, 0)):
    return TrajectoryCommand(0.0, np.array(x_d, float), np.array(v_d, float), np.array(a_d, float),
                             np.eye(3) if R_d is None else R_d, np.array(Om_d, float),
                             np.array(Om_d_dot, float))


def sc(R=None, Om=(0, 0, 0), x=(0, 0, 0), v=(0, 0, 0)):
    return SpacecraftState(np.array(x, float), np.array(v, float), np.eye(3) if R is None else R,
                           np.array(Om, float))


def test_attitude_error_identity():
    R = axis_angle([1, 2, 3], 0.8)
    Psi, e_R = ctl.attitude_error(R, R)
    assert Psi == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(e_R, 0.0, atol=1e-15)


@settings(max_examples=100)
@given(unit_axes, st.floats(-3.1, 3.1), unit_axes, st.floats(-3.1, 3.1))
def test_single_axis_offset(n, theta, base_axis, base_angle):
    R_d = axis_angle(base_axis, base_angle)
    R = R_d @ expm(theta * n)
    Psi, e_R = ctl.attitude_error(R, R_d)
    assert Psi == pytest.approx(1 - np.cos(theta), abs=1e-12)
    np.testing.assert_allclose(e_R, np.sin(theta) * n, atol=1e-12)
    assert 0.0 <= Psi <= 2.0 + 1e-15


def test_antipodal_degeneracy():
    R_d = axis_angle([0, 1, 1], 0.4)
    Psi, e_R = ctl.attitude_error(R_d @ expm(np.pi * np.array([1.0, 0, 0])), R_d)
    assert Psi == pytest.approx(2.0, abs=1e-15)
    np.testing.assert_allclose(e_R, 0.0, atol=1e-15)


def test_non_orthogonal_rejected():
    with pytest.raises(ctl.NonOrthogonalError):
        ctl.attitude_error(np.eye(3) * 1.01, np.eye(3))


def test_angular_velocity_error_cases():
    R = axis_angle([1, 0, 0], 0.3)
    np.testing.assert_allclose(ctl.angular_velocity_error(R, np.ones(3), R, np.ones(3)), 0.0, atol=1e-15)
    np.testing.assert_array_equal(ctl.angular_velocity_error(R, np.ones(3), np.eye(3), np.zeros(3)), 1.0)
    w = 0.7
    e = ctl.angular_velocity_error(expm([0, 0, np.pi]), np.zeros(3), np.eye(3), [0, 0, w])
    np.testing.assert_allclose(e, [0, 0, -w], atol=1e-15)


@settings(max_examples=30)
@given(unit_axes, st.floats(-3, 3), unit_axes, st.floats(-3, 3), unit_axes, st.floats(-3, 3))
def test_left_rotation_equivariance(a1, t1, a2, t2, a3, t3):
    R, R_d, Q = axis_angle(a1, t1), axis_angle(a2, t2), axis_angle(a3, t3)
    Om, Om_d = np.array([0.1, -0.2, 0.3]), np.array([0.05, 0.0, -0.1])
    P1, e1 = ctl.attitude_error(R, R_d)
    P2, e2 = ctl.attitude_error(Q @ R, Q @ R_d)
    assert P1 == pytest.approx(P2, abs=1e-12)
    np.testing.assert_allclose(e1, e2, atol=1e-12)
    np.testing.assert_allclose(ctl.angular_velocity_error(R, Om, R_d, Om_d),
                               ctl.angular_velocity_error(Q @ R, Om, Q @ R_d, Om_d), atol=1e-12)


def test_moment_gyroscopic_feedforward_only():
    Om = np.array([0.1, 0.2, -0.3])
    s = sc(Om=Om)
    # Omega_d chosen so that e_Omega = 0 with R = R_d = I
    u = ctl.control_moment(s, command(Om_d=Om), GAINS, PARAMS, np.zeros(3), np.zeros(3))
    J = PARAMS.J
    np.testing.assert_allclose(u, np.cross(Om, J @ Om) - J @ (hat(Om) @ Om), atol=1e-12)
    u0 = ctl.control_moment(sc(), command(), GAINS, PARAMS, np.zeros(3), np.zeros(3))
    np.testing.assert_array_equal(u0, 0.0)


def test_moment_pure_attitude_offset():
    s = sc(R=expm([0, 0, 0.1]))
    u = ctl.control_moment(s, command(), GAINS, PARAMS, np.zeros(3), np.zeros(3))
    np.testing.assert_allclose(u, [0, 0, -GAINS.k_R * np.sin(0.1)], atol=1e-12)


def test_force_hover_cancels_gravity():
    F1, F2 = np.array([1.0, -2.0, 0.5]), np.array([0.5, 0.5, 0.5])
    u = ctl.control_force(sc(), command(), GAINS, PARAMS, F1, F2)
    np.testing.assert_allclose(u, -F1 - F2)


def test_force_proportional_term():
    u = ctl.control_force(sc(x=(1, 0, 0)), command(), GAINS, PARAMS, np.zeros(3), np.zeros(3))
    np.testing.assert_allclose(u, [-GAINS.k_x, 0, 0])


def random_rotation(rng):
    return axis_angle(rng.normal(size=3), rng.uniform(0, np.pi))


def test_closed_loop_cancellation(rng):
    J = PARAMS.J
    for _ in range(200):
        R, R_d = random_rotation(rng), random_rotation(rng)
        Om, Om_d, Om_d_dot = rng.normal(size=(3, 3)) * 0.2
        M1, M2 = rng.normal(size=(2, 3)) * 1e-3
        s = sc(R=R, Om=Om)
        cmd = command(R_d=R_d, Om_d=Om_d, Om_d_dot=Om_d_dot)
        u_m = ctl.control_moment(s, cmd, GAINS, PARAMS, M1, M2)
        Om_dot = np.linalg.solve(J, -np.cross(Om, J @ Om) + M1 + M2 + u_m)
        Q = R.T @ R_d
        e_Om_dot = Om_dot + hat(Om) @ Q @ Om_d - Q @ Om_d_dot
        err = ctl.compute_errors(s, cmd)
        residual = J @ e_Om_dot + GAINS.k_R * err.e_R + GAINS.k_Omega * err.e_Omega
        scale = max(np.linalg.norm(J @ e_Om_dot), GAINS.k_R * np.linalg.norm(err.e_R), 1.0)
        assert np.linalg.norm(residual) < 1e-10 * scale


def test_control_is_smooth_along_paths(rng):
    # no switching terms: small state changes give proportionally small wrench changes
    R_d = random_rotation(rng)
    cmd = command(R_d=R_d, Om_d=[0, 0, 0.01], x_d=[10, 0, 0])
    base = sc(R=random_rotation(rng), Om=[0.01, 0.02, 0.0], x=[9, 1, 0], v=[0.1, 0, 0])
    dirs = rng.normal(size=(4, 3))
    us = []
    for s in np.linspace(0.0, 1e-3, 11):
        st_ = sc(R=base.R @ expm(s * dirs[0]), Om=base.Omega + s * dirs[1],
                 x=base.x + s * dirs[2], v=base.v + s * dirs[3])
        us.append(np.concatenate((ctl.control_moment(st_, cmd, GAINS, PARAMS, 0, 0),
                                  ctl.control_force(st_, cmd, GAINS, PARAMS, 0, 0))))
    d = np.diff(np.array(us), axis=0)
    # equal steps give nearly equal increments: locally linear, no sign switching
    assert np.abs(np.diff(d, axis=0)).max() < 1e-3 * np.abs(d).max()


def test_gain_rules():
    p = DumbbellParams.symmetric(500.0, 3.0, 0.5)
    g = ctl.select_gains(p, zeta=1.0, wn_translation=0.1, wn_attitude=0.2)
    assert g.k_x == pytest.approx(10.0)
    assert g.k_v == pytest.approx(200.0)
    assert g.k_R == pytest.approx(2350.0 * 0.04)
    assert g.k_Omega == pytest.approx(2 * 0.2 * 2350.0)


def test_doubling_mass_doubles_translational_gains():
    a = ctl.second_order_gains(1000.0, 0.7, 0.1)
    b = ctl.second_order_gains(2000.0, 0.7, 0.1)
    assert b == pytest.approx((2 * a[0], 2 * a[1]))


def test_nonpositive_specs_rejected():
    with pytest.raises(ValueError):
        ctl.second_order_gains(1000.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        ctl.ControlGains(1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        ctl.natural_frequency(-1.0, 1.0)


def test_settling_time_design():
    wn = ctl.natural_frequency(100.0, 1.0)
    assert np.exp(-wn * 100.0) == pytest.approx(0.02)
    g = ctl.select_gains(PARAMS, settling_time=100.0)
    assert g.k_x == pytest.approx(PARAMS.mass * wn**2)
