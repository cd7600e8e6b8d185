"""Dumbbell spacecraft on SE(3) about a uniformly rotating polyhedron asteroid."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import _dynamics_kernels as _dk
from ._accel import requested_backend
from .gravity import GravityModel, SingularityError
from .so3 import dexpinv, expm, hat, orthonormality_error, project_to_so3

MOMENT_CONSISTENT = "consistent"
MOMENT_PAPER_LITERAL = "paper-literal"


class CollisionError(RuntimeError):
    """A dumbbell mass reached the asteroid surface or interior."""

    def __init__(self, mass_index, point):
        super().__init__(f"mass {mass_index + 1} collided with the asteroid at {np.asarray(point).tolist()}")
        self.mass_index = mass_index
        self.point = point


class NonFiniteStateError(RuntimeError):
    pass


class SingularInertiaError(ValueError):
    pass


@dataclass(frozen=True)
class SpacecraftState:
    x: np.ndarray
    v: np.ndarray
    R: np.ndarray
    Omega: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("x", "v", "Omega"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=np.float64).reshape(3))
        object.__setattr__(self, "R", np.array(self.R, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "t", float(self.t))

    def is_finite(self):
        return bool(
            np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v))
            and np.all(np.isfinite(self.R)) and np.all(np.isfinite(self.Omega))
        )


def inertia_from_dumbbell(m1, m2, rho1, rho2, sphere_radius):
    """Inertia of two solid spheres of radius ``sphere_radius`` centred at rho1, rho2."""
    if m1 <= 0 or m2 <= 0:
        raise ValueError("masses must be positive")
    if sphere_radius < 0:
        raise ValueError("sphere radius must be non-negative")
    J = np.zeros((3, 3))
    for m, rho in ((m1, np.asarray(rho1, float)), (m2, np.asarray(rho2, float))):
        J += m * ((rho @ rho) * np.eye(3) - np.outer(rho, rho))
        J += 0.4 * m * sphere_radius**2 * np.eye(3)
    if np.linalg.eigvalsh(J).min() <= 1e-12 * max(1.0, np.trace(J)):
        raise SingularInertiaError("inertia is singular; use a positive sphere radius")
    return J


@dataclass(frozen=True)
class DumbbellParams:
    m1: float
    m2: float
    rho1: np.ndarray
    rho2: np.ndarray
    sphere_radius: float = 0.5
    J: Optional[np.ndarray] = None

    def __post_init__(self):
        r1 = np.array(self.rho1, dtype=np.float64).reshape(3)
        r2 = np.array(self.rho2, dtype=np.float64).reshape(3)
        object.__setattr__(self, "rho1", r1)
        object.__setattr__(self, "rho2", r2)
        if np.linalg.norm(self.m1 * r1 + self.m2 * r2) > 1e-9 * max(1.0, self.m1 * np.linalg.norm(r1)):
            raise ValueError("mass offsets must be measured from the center of mass")
        J = self.J
        if J is None:
            J = inertia_from_dumbbell(self.m1, self.m2, r1, r2, self.sphere_radius)
        J = np.array(J, dtype=np.float64)
        if not np.allclose(J, J.T, rtol=0, atol=1e-12 * np.abs(J).max()) or np.linalg.eigvalsh(J).min() <= 0:
            raise ValueError("J must be symmetric positive definite")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "J_inv", np.linalg.inv(J))

    @classmethod
    def symmetric(cls, mass_each=500.0, length=3.0, sphere_radius=0.5):
        """Two equal masses on the b1 axis; b1 points from m1 to m2."""
        half = 0.5 * length * np.array([1.0, 0.0, 0.0])
        return cls(mass_each, mass_each, -half, half, sphere_radius)

    @classmethod
    def symmetric_pair(cls, m1, m2, length, sphere_radius=0.5):
        """Masses ``length`` apart on b1 with offsets measured from the center of mass."""
        b1 = np.array([1.0, 0.0, 0.0])
        total = m1 + m2
        return cls(m1, m2, -(m2 / total) * length * b1, (m1 / total) * length * b1, sphere_radius)

    @property
    def mass(self):
        return self.m1 + self.m2


@dataclass(frozen=True)
class AsteroidModel:
    """Asteroid spinning at constant rate about ``spin_axis``; ``gravity`` may be None for field-free runs."""

    gravity: Optional[GravityModel]
    spin_rate: float = 0.0
    spin_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    R0: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        a = np.array(self.spin_axis, dtype=np.float64)
        object.__setattr__(self, "spin_axis", a / np.linalg.norm(a))
        object.__setattr__(self, "R0", np.array(self.R0, dtype=np.float64))

    def rotation(self, t):
        return expm(self.spin_rate * t * self.spin_axis) @ self.R0

    def rotations(self, ts):
        """R_A at each time in ``ts``, shape (n, 3, 3)."""
        th = self.spin_rate * np.asarray(ts, dtype=np.float64)
        K = hat(self.spin_axis)
        E = (np.eye(3) + np.sin(th)[:, None, None] * K
             + (1.0 - np.cos(th))[:, None, None] * (K @ K))
        return E @ self.R0

    def rotation_rates(self, t):
        """(R_A, dR_A/dt, d2R_A/dt2)."""
        RA = self.rotation(t)
        W = hat(self.spin_rate * self.spin_axis)
        return RA, W @ RA, W @ W @ RA


@dataclass(frozen=True)
class WrenchInput:
    u_f: np.ndarray
    u_m: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u_f", np.array(self.u_f, dtype=np.float64).reshape(3))
        object.__setattr__(self, "u_m", np.array(self.u_m, dtype=np.float64).reshape(3))
        if not (np.all(np.isfinite(self.u_f)) and np.all(np.isfinite(self.u_m))):
            raise ValueError("wrench components must be finite")

    @classmethod
    def zero(cls):
        return cls(np.zeros(3), np.zeros(3))


@dataclass(frozen=True)
class GravityWrench:
    """Per-mass gravitational forces (inertial) and moments (body) plus totals."""

    F1: np.ndarray
    F2: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    z1: np.ndarray
    z2: np.ndarray

    @property
    def force(self):
        return self.F1 + self.F2

    @property
    def moment(self):
        return self.M1 + self.M2


@dataclass(frozen=True)
class StateDerivative:
    x_dot: np.ndarray
    v_dot: np.ndarray
    R_dot: np.ndarray
    Omega_dot: np.ndarray


def mass_positions(state, asteroid, params):
    RA = asteroid.rotation(state.t)
    z1 = RA.T @ (state.x + state.R @ params.rho1)
    z2 = RA.T @ (state.x + state.R @ params.rho2)
    return z1, z2


def _attraction(gravity: GravityModel, z, index):
    try:
        ev = gravity.evaluate(z)
    except SingularityError:
        raise CollisionError(index, z) from None
    # Laplacian near -4 pi G sigma means the point is inside the body
    if ev.laplacian < -2.0 * np.pi * gravity.G * gravity.density:
        raise CollisionError(index, z)
    return ev


def _check_moment_mode(moment_mode):
    if moment_mode not in (MOMENT_CONSISTENT, MOMENT_PAPER_LITERAL):
        raise ValueError(f"unknown moment mode {moment_mode!r}")


def _kernel_args(asteroid, params, moment_mode):
    g = asteroid.gravity
    if g is None:
        empty3 = np.zeros((0, 3))
        gravity = (False, 0.0, asteroid.spin_rate, asteroid.spin_axis, asteroid.R0,
                   empty3, np.zeros((0, 3), np.int64), np.zeros((0, 2), np.int64),
                   np.zeros((0, 3, 3)), np.zeros((0, 3, 3)), np.zeros(0), 0.0, 0.0)
    else:
        d = g.dyads
        gravity = (True, g.G * g.density, asteroid.spin_rate, asteroid.spin_axis, asteroid.R0,
                   g.mesh.vertices, g.mesh.faces, d.topology.edges, d.face_dyads, d.edge_dyads,
                   d.edge_lengths, g.eps_edge, g.eps_face)
    return (params.m1, params.m2, params.rho1, params.rho2) , gravity, moment_mode == MOMENT_PAPER_LITERAL


def gravity_wrench(state, asteroid, params, moment_mode=MOMENT_CONSISTENT, backend=None) -> GravityWrench:
    _check_moment_mode(moment_mode)
    z1, z2 = mass_positions(state, asteroid, params)
    if asteroid.gravity is not None and (backend or requested_backend()) == "numba":
        masses, grav, literal = _kernel_args(asteroid, params, moment_mode)
        F1, F2, M1, M2, status, info = _dk.dumbbell_gravity(
            state.t, state.x, state.R, *masses, *grav, literal
        )
        if status == _dk.STEP_COLLISION:
            raise CollisionError(info, z1 if info == 0 else z2)
        if status != _dk.STEP_OK:
            raise NonFiniteStateError(f"non-finite gravity at t={state.t}")
        return GravityWrench(F1, F2, M1, M2, z1, z2)
    if asteroid.gravity is None:
        zero = np.zeros(3)
        return GravityWrench(zero, zero, zero, zero, z1, z2)
    RA = asteroid.rotation(state.t)
    g1 = _attraction(asteroid.gravity, z1, 0).attraction
    g2 = _attraction(asteroid.gravity, z2, 1).attraction
    F1 = params.m1 * (RA @ g1)
    F2 = params.m2 * (RA @ g2)
    if moment_mode == MOMENT_CONSISTENT:
        # arm and force both in the body frame
        M1 = np.cross(params.rho1, state.R.T @ F1)
        M2 = np.cross(params.rho2, state.R.T @ F2)
    elif moment_mode == MOMENT_PAPER_LITERAL:
        M1 = params.m1 * np.cross(RA.T @ params.rho1, state.R.T @ g1)
        M2 = params.m2 * np.cross(RA.T @ params.rho2, state.R.T @ g2)
    return GravityWrench(F1, F2, M1, M2, z1, z2)


def eom(state, asteroid, params, wrench: WrenchInput, moment_mode=MOMENT_CONSISTENT,
        backend=None) -> StateDerivative:
    gw = gravity_wrench(state, asteroid, params, moment_mode, backend)
    Om = state.Omega
    J = params.J
    v_dot = (gw.force + wrench.u_f) / params.mass
    Om_dot = params.J_inv @ (-np.cross(Om, J @ Om) + gw.moment + wrench.u_m)
    d = StateDerivative(state.v.copy(), v_dot, state.R @ hat(Om), Om_dot)
    if not (np.all(np.isfinite(v_dot)) and np.all(np.isfinite(Om_dot))):
        raise NonFiniteStateError(f"non-finite derivative at t={state.t}")
    return d


def potential_energy(state, asteroid, params):
    if asteroid.gravity is None:
        return 0.0
    z1, z2 = mass_positions(state, asteroid, params)
    g = asteroid.gravity
    return -params.m1 * g.potential(z1) - params.m2 * g.potential(z2)


def kinetic_energy(state, params):
    return 0.5 * params.mass * (state.v @ state.v) + 0.5 * state.Omega @ params.J @ state.Omega


def total_energy(state, asteroid, params):
    return kinetic_energy(state, params) + potential_energy(state, asteroid, params)


def angular_momentum(state, params):
    """Total inertial angular momentum about the origin."""
    return params.mass * np.cross(state.x, state.v) + state.R @ (params.J @ state.Omega)


def jacobi_energy(state, asteroid, params):
    """Energy in the asteroid-fixed frame, conserved for a uniformly spinning body without control."""
    h = angular_momentum(state, params) @ asteroid.spin_axis
    return total_energy(state, asteroid, params) - asteroid.spin_rate * h


# ---------------------------------------------------------------------------
# integration

Derivative = Callable[[SpacecraftState], StateDerivative]

_REPROJECT_TOL = 1e-12


def _stage(state, theta, dx, dv, dOm, t):
    R = state.R @ expm(theta)
    return SpacecraftState(state.x + dx, state.v + dv, R, state.Omega + dOm, t)


def step(state: SpacecraftState, derivative: Derivative, dt) -> SpacecraftState:
    """One RK4 step in the Munthe-Kaas form: (x, v, Omega) in R^9 and the attitude
    through local exponential coordinates, R_next = R exp(hat(theta))."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    t = state.t
    zero = np.zeros(3)

    d1 = derivative(state)
    k1 = (d1.x_dot, d1.v_dot, state.Omega, d1.Omega_dot)

    s2 = _stage(state, 0.5 * dt * k1[2], 0.5 * dt * k1[0], 0.5 * dt * k1[1], 0.5 * dt * k1[3], t + 0.5 * dt)
    d2 = derivative(s2)
    k2 = (d2.x_dot, d2.v_dot, dexpinv(0.5 * dt * k1[2], s2.Omega), d2.Omega_dot)

    s3 = _stage(state, 0.5 * dt * k2[2], 0.5 * dt * k2[0], 0.5 * dt * k2[1], 0.5 * dt * k2[3], t + 0.5 * dt)
    d3 = derivative(s3)
    k3 = (d3.x_dot, d3.v_dot, dexpinv(0.5 * dt * k2[2], s3.Omega), d3.Omega_dot)

    s4 = _stage(state, dt * k3[2], dt * k3[0], dt * k3[1], dt * k3[3], t + dt)
    d4 = derivative(s4)
    k4 = (d4.x_dot, d4.v_dot, dexpinv(dt * k3[2], s4.Omega), d4.Omega_dot)

    incr = [dt / 6.0 * (a + 2.0 * b + 2.0 * c + d) for a, b, c, d in zip(k1, k2, k3, k4)]
    R = state.R @ expm(incr[2] if np.any(incr[2]) else zero)
    if orthonormality_error(R) > _REPROJECT_TOL:
        R = project_to_so3(R)
    nxt = SpacecraftState(state.x + incr[0], state.v + incr[1], R, state.Omega + incr[3], t + dt)
    if not nxt.is_finite():
        raise NonFiniteStateError(f"non-finite state after step from t={t}")
    return nxt


@dataclass(frozen=True)
class StepResult:
    state: SpacecraftState
    collision: Optional[CollisionError] = None


def step_until_contact(state, advance, dt, min_dt=1e-3) -> StepResult:
    """Advance by ``dt`` with ``advance(state, h)``. On a collision inside the step,
    return the furthest collision-free state found by repeated halving with the event."""
    try:
        return StepResult(advance(state, dt))
    except CollisionError as exc:
        event = exc
    t_end = state.t + dt
    h = 0.5 * dt
    current = state
    while h >= min_dt:
        if current.t + h > t_end + 1e-12 * dt:
            h *= 0.5
            continue
        try:
            current = advance(current, h)
        except CollisionError as exc:
            event = exc
            h *= 0.5
            continue
        if current.t >= t_end - 1e-12 * dt:
            # only an intermediate stage touched the body
            return StepResult(current)
    return StepResult(current, event)


def make_derivative(asteroid, params, wrench: WrenchInput, moment_mode=MOMENT_CONSISTENT,
                    backend=None) -> Derivative:
    def derivative(s):
        return eom(s, asteroid, params, wrench, moment_mode, backend)

    return derivative


def step_dumbbell(state, asteroid, params, wrench: WrenchInput, dt, moment_mode=MOMENT_CONSISTENT,
                  backend=None) -> SpacecraftState:
    """``step`` specialised to the dumbbell equations of motion; compiled when numba is active."""
    _check_moment_mode(moment_mode)
    if (backend or requested_backend()) != "numba":
        return step(state, make_derivative(asteroid, params, wrench, moment_mode, "numpy"), dt)
    if not dt > 0:
        raise ValueError("dt must be positive")
    masses, grav, literal = _kernel_args(asteroid, params, moment_mode)
    x, v, R, Om, status, info = _dk.rk4_step(
        state.t, dt, state.x, state.v, state.R, state.Omega, wrench.u_f, wrench.u_m,
        *masses, params.J, params.J_inv, *grav, literal,
    )
    if status == _dk.STEP_COLLISION:
        raise CollisionError(info, mass_positions(state, asteroid, params)[info])
    if status != _dk.STEP_OK:
        raise NonFiniteStateError(f"non-finite state after step from t={state.t}")
    if orthonormality_error(R) > _REPROJECT_TOL:
        R = project_to_so3(R)
    return SpacecraftState(x, v, R, Om, state.t + dt)


def propagate(state, asteroid, params, dt, n_steps, wrench=None, moment_mode=MOMENT_CONSISTENT):
    """Fixed-wrench propagation; returns the list of states including the initial one."""
    wrench = wrench or WrenchInput.zero()
    deriv = make_derivative(asteroid, params, wrench, moment_mode)
    out = [state]
    for _ in range(n_steps):
        state = step(state, deriv, dt)
        out.append(state)
    return out


def with_time(state, t):
    return replace(state, t=t)
