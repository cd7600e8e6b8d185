"""Two-phase landing command and nadir-pointing attitude command."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .so3 import skew_part_vee

CONTINUOUS = "continuous"
PAPER_LITERAL = "paper-literal"

SYNC_INERTIAL = "inertial"
SYNC_ASTEROID = "asteroid"

LANDING = "landing"
HOLD = "hold"

EPS_ALIGN = 1e-6
H_ATTITUDE = 1e-2


class NadirSingularityError(ValueError):
    pass


@dataclass(frozen=True)
class GuidanceConfig:
    """``descent_rate`` is the signed radial rate in phase 2 (m/s). When omitted it is
    -2000/t_d in continuous mode and +2000/t_d in paper-literal mode."""

    r0: float = 2550.0
    t_d: float = 3600.0
    descent_rate: Optional[float] = None
    continuity: str = CONTINUOUS
    phase1_sync: str = SYNC_INERTIAL
    mode: str = LANDING
    hold_position: Optional[np.ndarray] = None
    surface_radius: float = 0.0
    h_attitude: float = H_ATTITUDE

    def __post_init__(self):
        if self.mode not in (LANDING, HOLD):
            raise ValueError(f"unknown guidance mode {self.mode!r}")
        if self.mode == HOLD:
            if self.hold_position is None:
                raise ValueError("hold mode needs hold_position")
            object.__setattr__(self, "hold_position", np.array(self.hold_position, dtype=np.float64))
            return
        if not self.t_d > 0:
            raise ValueError("t_d must be positive")
        if not self.r0 > self.surface_radius:
            raise ValueError("r0 must exceed the body radius")
        if self.continuity not in (CONTINUOUS, PAPER_LITERAL):
            raise ValueError(f"unknown continuity mode {self.continuity!r}")
        if self.phase1_sync not in (SYNC_INERTIAL, SYNC_ASTEROID):
            raise ValueError(f"unknown phase-1 sync {self.phase1_sync!r}")

    @property
    def radial_rate(self):
        if self.descent_rate is not None:
            return float(self.descent_rate)
        sign = -1.0 if self.continuity == CONTINUOUS else 1.0
        return sign * 2000.0 / self.t_d


@dataclass(frozen=True)
class TrajectoryCommand:
    t: float
    x_d: np.ndarray
    v_d: np.ndarray
    a_d: np.ndarray
    R_d: np.ndarray
    Omega_d: np.ndarray
    Omega_d_dot: np.ndarray
    phase: int = 1
    below_surface: bool = False


def phase1_rate(config: GuidanceConfig, asteroid):
    w = np.pi / (2.0 * config.t_d)
    if config.phase1_sync == SYNC_ASTEROID:
        w += asteroid.spin_rate
    return w


def phase2_direction(config, asteroid):
    """Asteroid-frame unit direction of the phase-2 radial line."""
    if config.continuity == PAPER_LITERAL:
        return np.array([1.0, 0.0, 0.0])
    w = phase1_rate(config, asteroid)
    th = w * config.t_d
    x_end = np.array([np.sin(th), -np.cos(th), 0.0])
    return asteroid.rotation(config.t_d).T @ x_end


def desired_position(t, config: GuidanceConfig, asteroid):
    """(x_d, v_d, a_d) in the inertial frame."""
    if config.mode == HOLD:
        z = np.zeros(3)
        return config.hold_position.copy(), z, z.copy()
    if t <= config.t_d:
        r0 = config.r0
        w = phase1_rate(config, asteroid)
        s, c = np.sin(w * t), np.cos(w * t)
        x = r0 * np.array([s, -c, 0.0])
        v = r0 * w * np.array([c, s, 0.0])
        a = -w * w * x
        return x, v, a
    u = phase2_direction(config, asteroid)
    rho = config.r0 + config.radial_rate * (t - config.t_d)
    p = rho * u
    p_dot = config.radial_rate * u
    RA, RA_dot, RA_ddot = asteroid.rotation_rates(t)
    x = RA @ p
    v = RA_dot @ p + RA @ p_dot
    a = RA_ddot @ p + 2.0 * RA_dot @ p_dot
    return x, v, a


def commanded_radius(t, config, asteroid):
    if config.mode == HOLD:
        return float(np.linalg.norm(config.hold_position))
    if t <= config.t_d:
        return config.r0
    return config.r0 + config.radial_rate * (t - config.t_d)


def nadir_attitude(x_d, spin_axis=(0.0, 0.0, 1.0)):
    """R_d = [b1 b2 b3] with b1 toward the origin and b3 in the plane of b1 and the spin axis."""
    x_d = np.asarray(x_d, dtype=np.float64)
    f3 = np.asarray(spin_axis, dtype=np.float64)
    n = np.linalg.norm(x_d)
    if n == 0.0:
        raise NadirSingularityError("nadir direction undefined at the origin")
    b1 = -x_d / n
    if abs(b1 @ f3) > 1.0 - EPS_ALIGN:
        raise NadirSingularityError("commanded position is aligned with the spin axis")
    u = f3 - (f3 @ b1) * b1
    b3 = u / np.linalg.norm(u)
    b2 = np.cross(b3, b1)
    return np.column_stack((b1, b2, b3))


def _positions(ts, config, asteroid):
    """Commanded positions (n, 3) for times that all lie in the same phase."""
    ts = np.asarray(ts, dtype=np.float64)
    if config.mode == HOLD:
        return np.broadcast_to(config.hold_position, (len(ts), 3))
    if ts[-1] <= config.t_d:
        w = phase1_rate(config, asteroid)
        return config.r0 * np.column_stack((np.sin(w * ts), -np.cos(w * ts), np.zeros_like(ts)))
    u = phase2_direction(config, asteroid)
    rho = config.r0 + config.radial_rate * (ts - config.t_d)
    p = rho[:, None] * u
    return np.einsum("nij,nj->ni", asteroid.rotations(ts), p)


def nadir_attitudes(xs, spin_axis=(0.0, 0.0, 1.0)):
    """Vectorized ``nadir_attitude`` for positions of shape (n, 3)."""
    xs = np.asarray(xs, dtype=np.float64)
    f3 = np.asarray(spin_axis, dtype=np.float64)
    n = np.linalg.norm(xs, axis=1)
    if np.any(n == 0.0):
        raise NadirSingularityError("nadir direction undefined at the origin")
    b1 = -xs / n[:, None]
    c = b1 @ f3
    if np.any(np.abs(c) > 1.0 - EPS_ALIGN):
        raise NadirSingularityError("commanded position is aligned with the spin axis")
    u = f3 - c[:, None] * b1
    b3 = u / np.linalg.norm(u, axis=1)[:, None]
    b2 = np.cross(b3, b1)
    return np.stack((b1, b2, b3), axis=2)


def _stencil_side(t, h, config):
    # keep finite-difference stencils on one side of the phase switch
    if config.mode == HOLD:
        return 0
    td = config.t_d
    if t <= td and t + 2 * h > td:
        return -1
    if t > td and t - 2 * h <= td:
        return 1
    return 0


def desired_attitude(t, config: GuidanceConfig, asteroid):
    """(R_d, Omega_d, Omega_d_dot) by finite differences of the nadir frame along the command.

    Central differences of step ``h_attitude``; one-sided second-order
    differences when the stencil would straddle the phase switch.
    """
    h = config.h_attitude
    side = _stencil_side(t, h, config)
    if side == 0:
        k = np.arange(-2, 3)
    else:
        k = side * np.arange(0, 5)
        order = np.argsort(k)
        k = k[order]
    Rs = nadir_attitudes(_positions(t + k * h, config, asteroid), asteroid.spin_axis)
    at = {int(kk): i for i, kk in enumerate(k)}

    def R(j):
        return Rs[at[j]]

    def rate_at(j):
        if side == 0:
            Rdot = (R(j + 1) - R(j - 1)) / (2 * h)
        else:
            s = side
            Rdot = s * (-3 * R(j) + 4 * R(j + s) - R(j + 2 * s)) / (2 * h)
        return skew_part_vee(R(j).T @ Rdot)

    Om = rate_at(0)
    if side == 0:
        Om_dot = (rate_at(1) - rate_at(-1)) / (2 * h)
    else:
        s = side
        Om_dot = s * (-3 * Om + 4 * rate_at(s) - rate_at(2 * s)) / (2 * h)
    return R(0).copy(), Om, Om_dot


def command_at(t, config: GuidanceConfig, asteroid) -> TrajectoryCommand:
    x, v, a = desired_position(t, config, asteroid)
    R_d, Om, Om_dot = desired_attitude(t, config, asteroid)
    phase = 1 if (config.mode == HOLD or t <= config.t_d) else 2
    below = config.mode == LANDING and commanded_radius(t, config, asteroid) < config.surface_radius
    return TrajectoryCommand(t, x, v, a, R_d, Om, Om_dot, phase, bool(below))


@dataclass
class CommandStream:
    """Per-time cache around ``command_at`` for one scenario run."""

    config: GuidanceConfig
    asteroid: object
    _cache: dict = field(default_factory=dict)

    def __call__(self, t) -> TrajectoryCommand:
        cmd = self._cache.get(t)
        if cmd is None:
            cmd = command_at(t, self.config, self.asteroid)
            self._cache = {t: cmd}
        return cmd


def velocity_jump_at_switch(config, asteroid):
    """Norm of the commanded velocity discontinuity at t_d (diagnostic)."""
    _, v1, _ = desired_position(config.t_d, config, asteroid)
    _, v2, _ = desired_position(np.nextafter(config.t_d, np.inf), config, asteroid)
    return float(np.linalg.norm(v2 - v1))
