import numpy as np
import pytest

from astroland.rigid_body import (
    MOMENT_CONSISTENT,
    MOMENT_PAPER_LITERAL,
    AsteroidModel,
    CollisionError,
    DumbbellParams,
    SingularInertiaError,
    SpacecraftState,
    WrenchInput,
    angular_momentum,
    eom,
    gravity_wrench,
    inertia_from_dumbbell,
    jacobi_energy,
    kinetic_energy,
    make_derivative,
    mass_positions,
    step,
    step_dumbbell,
    step_until_contact,
    total_energy,
)
from astroland.so3 import axis_angle, orthonormality_error

LANDER = DumbbellParams.symmetric(500.0, 3.0, 0.5)


def state(x=(0, 0, 0), v=(0, 0, 0), R=None, Om=(0, 0, 0), t=0.0):
    return SpacecraftState(np.array(x, float), np.array(v, float),
                           np.eye(3) if R is None else R, np.array(Om, float), t)


# -- parameters -------------------------------------------------------------

def test_inertia_formula_for_landing_dumbbell():
    # 2 * 500 * 1.5^2 + 2 * 0.4 * 500 * 0.25 = 2250 + 100
    np.testing.assert_allclose(LANDER.J, np.diag([100.0, 2350.0, 2350.0]), rtol=1e-15)


def test_inertia_coincident_spheres():
    J = inertia_from_dumbbell(2.0, 3.0, np.zeros(3), np.zeros(3), 0.5)
    np.testing.assert_allclose(J, 0.4 * 5.0 * 0.25 * np.eye(3))


def test_inertia_point_masses_singular():
    with pytest.raises(SingularInertiaError):
        inertia_from_dumbbell(1.0, 1.0, [1.0, 0, 0], [-1.0, 0, 0], 0.0)


def test_offsets_must_be_about_center_of_mass():
    with pytest.raises(ValueError):
        DumbbellParams(1.0, 1.0, [1.0, 0, 0], [0.5, 0, 0])


def test_explicit_inertia_must_be_spd():
    with pytest.raises(ValueError):
        DumbbellParams(1.0, 1.0, [1.0, 0, 0], [-1.0, 0, 0], J=np.diag([1.0, -1.0, 1.0]))


def test_unequal_pair_offsets():
    p = DumbbellParams.symmetric_pair(300.0, 700.0, 2.0)
    np.testing.assert_allclose(p.m1 * p.rho1 + p.m2 * p.rho2, 0.0, atol=1e-12)
    assert np.linalg.norm(p.rho2 - p.rho1) == pytest.approx(2.0)


def test_asteroid_rotation_rates():
    ast = AsteroidModel(None, 0.3, [0, 0, 1])
    t, h = 2.0, 1e-5
    RA, dRA, ddRA = ast.rotation_rates(t)
    np.testing.assert_allclose(dRA, (ast.rotation(t + h) - ast.rotation(t - h)) / (2 * h), atol=1e-9)
    np.testing.assert_allclose(ddRA, (ast.rotation(t + h) - 2 * RA + ast.rotation(t - h)) / h**2, atol=1e-5)
    np.testing.assert_allclose(ast.rotations([t, 0.0])[0], RA, atol=1e-15)


# -- kinematics and wrench ----------------------------------------------------

def test_mass_positions_identity_frames():
    p = DumbbellParams(1.0, 1.0, np.zeros(3), np.zeros(3), 0.5)
    z1, z2 = mass_positions(state(x=(1, 2, 3)), AsteroidModel(None), p)
    np.testing.assert_array_equal(z1, [1, 2, 3])
    np.testing.assert_array_equal(z2, [1, 2, 3])


def test_mass_positions_at_origin_are_offsets():
    z1, z2 = mass_positions(state(), AsteroidModel(None), LANDER)
    np.testing.assert_array_equal(z1, LANDER.rho1)
    np.testing.assert_array_equal(z2, LANDER.rho2)


def test_mass_positions_rotated_asteroid():
    p = DumbbellParams(1.0, 1.0, np.zeros(3), np.zeros(3), 0.5)
    ast = AsteroidModel(None, spin_rate=np.pi / 2)
    z1, _ = mass_positions(state(x=(1.0, 2.0, 3.0), t=1.0), ast, p)
    np.testing.assert_allclose(z1, [2.0, -1.0, 3.0], atol=1e-15)


def test_zero_arm_gives_zero_moment(cube_world):
    ast, _ = cube_world
    p = DumbbellParams(1.0, 1.0, np.zeros(3), np.zeros(3), 0.1)
    gw = gravity_wrench(state(x=(3, 1, 0.5), R=axis_angle([1, 1, 0], 0.4)), ast, p)
    np.testing.assert_array_equal(gw.moment, 0.0)


def test_far_field_force(itokawa_model):
    ast = AsteroidModel(itokawa_model, 2 * np.pi / 43560)
    r = 20 * itokawa_model.mesh.max_radius()
    x = r * np.array([0.6, -0.8, 0.0])
    gw = gravity_wrench(state(x=x, t=100.0), ast, LANDER)
    expected = itokawa_model.mu * LANDER.mass / r**2
    assert np.linalg.norm(gw.force) == pytest.approx(expected, rel=1e-2)


def test_moment_matches_two_point_oracle(unit_cube_model):
    ast = AsteroidModel(unit_cube_model)
    p = DumbbellParams(0.5, 0.5, [-0.15, 0, 0], [0.15, 0, 0], 0.05)
    radial = np.array([1.0, 0.3, 0.2])
    radial /= np.linalg.norm(radial)
    x = 10 * 0.87 * radial
    # b1 along the radial direction, so each arm is radial
    b3 = np.cross(radial, [0, 0, 1.0])
    b3 /= np.linalg.norm(b3)
    R = np.column_stack((radial, np.cross(b3, radial), b3))
    s = state(x=x, R=R)
    gw = gravity_wrench(s, ast, p)
    oracle = np.zeros(3)
    for m, rho in ((p.m1, p.rho1), (p.m2, p.rho2)):
        g = unit_cube_model.attraction(x + R @ rho)
        oracle += np.cross(rho, R.T @ (m * g))
    assert abs(gw.moment @ (R.T @ radial)) <= 1e-12 * np.linalg.norm(gw.moment)
    assert np.linalg.norm(gw.moment - oracle) <= 1e-6 * np.linalg.norm(oracle)
    assert np.linalg.norm(oracle) > 0


def test_moment_modes_agree_without_asteroid_rotation(cube_world):
    ast, p = cube_world
    s = state(x=(2.0, 1.0, 0.5), R=axis_angle([1, 2, 0], 0.7))
    a = gravity_wrench(s, ast, p, MOMENT_CONSISTENT)
    b = gravity_wrench(s, ast, p, MOMENT_PAPER_LITERAL)
    np.testing.assert_allclose(a.moment, b.moment, rtol=1e-14, atol=1e-18)


def test_moment_modes_differ_with_asteroid_rotation(unit_cube_model):
    ast = AsteroidModel(unit_cube_model, spin_rate=0.3)
    p = DumbbellParams(0.5, 0.5, [-0.15, 0, 0], [0.15, 0, 0], 0.05)
    s = state(x=(2.0, 1.0, 0.5), R=axis_angle([1, 2, 0], 0.7), t=2.0)
    a = gravity_wrench(s, ast, p, MOMENT_CONSISTENT)
    b = gravity_wrench(s, ast, p, MOMENT_PAPER_LITERAL)
    assert np.linalg.norm(a.moment - b.moment) > 1e-3 * np.linalg.norm(a.moment)
    np.testing.assert_array_equal(a.force, b.force)


def test_unknown_moment_mode(cube_world):
    ast, p = cube_world
    with pytest.raises(ValueError):
        gravity_wrench(state(x=(3, 0, 0)), ast, p, "sideways")


def test_collision_detected(cube_world):
    ast, p = cube_world
    with pytest.raises(CollisionError) as info:
        gravity_wrench(state(x=(0.0, 0.0, 0.0)), ast, p)
    assert info.value.mass_index == 0


# -- equations of motion ------------------------------------------------------

def test_eom_no_torque_no_rate():
    ast = AsteroidModel(None)
    d = eom(state(x=(1, 2, 3), v=(0.1, 0, 0)), ast, LANDER, WrenchInput.zero())
    np.testing.assert_array_equal(d.Omega_dot, 0.0)
    np.testing.assert_array_equal(d.x_dot, [0.1, 0, 0])


def test_eom_force_cancellation(cube_world):
    ast, p = cube_world
    s = state(x=(2.0, -1.0, 0.7), R=axis_angle([0, 1, 1], 0.3))
    gw = gravity_wrench(s, ast, p)
    d = eom(s, ast, p, WrenchInput(-gw.force, np.zeros(3)))
    np.testing.assert_allclose(d.v_dot, 0.0, atol=1e-17)


def test_free_rotation_invariants_rates(rng):
    # d/dt |J Om|^2 and d/dt Om.J.Om vanish for the torque-free Euler equations
    ast = AsteroidModel(None)
    for _ in range(20):
        Om = rng.normal(size=3)
        d = eom(state(Om=Om), ast, LANDER, WrenchInput.zero())
        J = LANDER.J
        assert abs((J @ Om) @ (J @ d.Omega_dot)) < 1e-12 * np.linalg.norm(J @ Om) ** 2
        assert abs(Om @ J @ d.Omega_dot) < 1e-12 * (Om @ J @ Om)


def test_eom_deterministic(cube_world):
    ast, p = cube_world
    s = state(x=(2.0, -1.0, 0.7), v=(0.1, 0.2, 0), R=axis_angle([0, 1, 1], 0.3), Om=(0.1, 0, 0.2))
    a = eom(s, ast, p, WrenchInput.zero())
    b = eom(s, ast, p, WrenchInput.zero())
    assert np.array_equal(a.v_dot, b.v_dot) and np.array_equal(a.Omega_dot, b.Omega_dot)


# -- integration ------------------------------------------------------------

def test_rotation_period_returns_to_start():
    ast = AsteroidModel(None)
    w = 0.1
    R0 = axis_angle([1, 0, 0], 0.3)
    s = state(R=R0, Om=(0, 0, w))
    n = 400
    for _ in range(n):
        s = step_dumbbell(s, ast, LANDER, WrenchInput.zero(), 2 * np.pi / w / n)
    assert np.abs(s.R - R0).max() < 1e-8


def test_so3_preserved_over_many_steps():
    ast = AsteroidModel(None)
    s = state(Om=(0.3, 0.05, -0.2))
    for _ in range(100_000):
        s = step_dumbbell(s, ast, LANDER, WrenchInput.zero(), 0.1)
    assert orthonormality_error(s.R) < 1e-9
    assert np.linalg.det(s.R) == pytest.approx(1.0, abs=1e-9)


def test_free_rotation_invariants_discrete():
    ast = AsteroidModel(None)
    s = state(Om=(0.3, 0.05, -0.2))
    J = LANDER.J
    T0, H0 = s.Omega @ J @ s.Omega, np.linalg.norm(J @ s.Omega)
    Hin0 = s.R @ J @ s.Omega
    for _ in range(2000):
        s = step_dumbbell(s, ast, LANDER, WrenchInput.zero(), 0.05)
    assert s.Omega @ J @ s.Omega == pytest.approx(T0, rel=1e-7)
    assert np.linalg.norm(J @ s.Omega) == pytest.approx(H0, rel=1e-7)
    np.testing.assert_allclose(s.R @ J @ s.Omega, Hin0, rtol=1e-6)


def test_linear_momentum_without_gravity():
    ast = AsteroidModel(None)
    s = state(x=(1, 2, 3), v=(0.25, -0.5, 0.125), Om=(0.1, 0.2, 0.3))
    for _ in range(100):
        s = step_dumbbell(s, ast, LANDER, WrenchInput(np.zeros(3), np.ones(3)), 0.5)
    np.testing.assert_array_equal(s.v, [0.25, -0.5, 0.125])
    np.testing.assert_allclose(s.x, np.array([1, 2, 3]) + 50 * np.array([0.25, -0.5, 0.125]), atol=1e-12)


def test_step_requires_positive_dt(cube_world):
    ast, p = cube_world
    with pytest.raises(ValueError):
        step(state(x=(3, 0, 0)), make_derivative(ast, p, WrenchInput.zero()), 0.0)


def test_energy_conserved_short_run(cube_world):
    ast, p = cube_world
    s = state(x=(1.6, 0.0, 0.2), v=(0.0, 0.75, 0.1), Om=(0.05, 0.3, -0.4))
    E0 = total_energy(s, ast, p)
    for _ in range(200):
        s = step_dumbbell(s, ast, p, WrenchInput.zero(), 0.05)
    assert abs(total_energy(s, ast, p) - E0) < 1e-7 * abs(E0)


def test_jacobi_integral_rotating_asteroid(itokawa_model):
    ast = AsteroidModel(itokawa_model, 2 * np.pi / 43560)
    r = 900.0
    v = np.sqrt(itokawa_model.mu / r)
    s = state(x=(r, 0, 100.0), v=(0, 0.9 * v, 0.05 * v), R=axis_angle([0, 0, 1], 0.3), Om=(0, 0, 1e-3))
    J0 = jacobi_energy(s, ast, LANDER)
    E0 = total_energy(s, ast, LANDER)
    for _ in range(3600):
        s = step_dumbbell(s, ast, LANDER, WrenchInput.zero(), 1.0)
    assert abs(jacobi_energy(s, ast, LANDER) - J0) < 1e-5 * abs(J0)
    # the inertial energy alone is not conserved when the body spins
    assert abs(total_energy(s, ast, LANDER) - E0) > 1e3 * abs(jacobi_energy(s, ast, LANDER) - J0)


def test_angular_momentum_about_origin_without_gravity():
    ast = AsteroidModel(None)
    s = state(x=(3, 0, 0), v=(0, 1, 0), Om=(0.2, 0.1, 0.0))
    h0 = angular_momentum(s, LANDER)
    for _ in range(50):
        s = step_dumbbell(s, ast, LANDER, WrenchInput.zero(), 0.2)
    # RK4 keeps the body part to truncation error only
    np.testing.assert_allclose(angular_momentum(s, LANDER), h0, rtol=1e-6)
    assert kinetic_energy(s, LANDER) > 0


def test_step_until_contact_truncates(cube_world):
    ast, p = cube_world
    s = state(x=(0.8, 0.0, 0.0), v=(-0.5, 0.0, 0.0))

    def advance(st, h):
        return step_dumbbell(st, ast, p, WrenchInput.zero(), h)

    res = step_until_contact(s, advance, 1.0, min_dt=1e-4)
    assert res.collision is not None
    assert 0.0 < res.state.t < 1.0
    # the nearer mass stops within the last successful sub-step of the surface
    z = mass_positions(res.state, ast, p)
    assert min(np.abs(zz).max() for zz in z) < 0.5 + 0.5 * 2e-4 + 1e-3


def test_step_until_contact_passes_clean_steps(cube_world):
    ast, p = cube_world
    s = state(x=(3.0, 0.0, 0.0))
    res = step_until_contact(s, lambda st, h: step_dumbbell(st, ast, p, WrenchInput.zero(), h), 0.1)
    assert res.collision is None and res.state.t == pytest.approx(0.1)
