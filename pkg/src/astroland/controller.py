"""Geometric tracking controller on SE(3)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .so3 import hat, orthonormality_error, skew_part_vee

DEFAULT_ZETA = 1.0
DEFAULT_WN_TRANSLATION = 0.05
DEFAULT_WN_ATTITUDE = 0.2


class NonOrthogonalError(ValueError):
    pass


@dataclass(frozen=True)
class ControlGains:
    k_x: float
    k_v: float
    k_R: float
    k_Omega: float

    def __post_init__(self):
        for name in ("k_x", "k_v", "k_R", "k_Omega"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gain {name} must be strictly positive")


@dataclass(frozen=True)
class ErrorState:
    Psi: float
    e_R: np.ndarray
    e_Omega: np.ndarray
    e_x: np.ndarray
    e_v: np.ndarray


def _check_rotation(R, name):
    if orthonormality_error(R) > 1e-6:
        raise NonOrthogonalError(f"{name} is not orthogonal")


def attitude_error(R, R_d):
    """Psi = tr(I - R_d^T R)/2 and e_R = vee(R_d^T R - R^T R_d)/2."""
    _check_rotation(R, "R")
    _check_rotation(R_d, "R_d")
    Q = R_d.T @ R
    Psi = 0.5 * (3.0 - np.trace(Q))
    # vee of (Q - Q^T)/2 equals the skew part of Q
    e_R = skew_part_vee(Q)
    return float(Psi), e_R


def angular_velocity_error(R, Omega, R_d, Omega_d):
    return Omega - R.T @ (R_d @ Omega_d)


def compute_errors(state, command) -> ErrorState:
    Psi, e_R = attitude_error(state.R, command.R_d)
    e_Om = angular_velocity_error(state.R, state.Omega, command.R_d, command.Omega_d)
    return ErrorState(Psi, e_R, e_Om, state.x - command.x_d, state.v - command.v_d)


def control_moment(state, command, gains: ControlGains, params, M1, M2):
    R, Om, J = state.R, state.Omega, params.J
    _, e_R = attitude_error(R, command.R_d)
    e_Om = angular_velocity_error(R, Om, command.R_d, command.Omega_d)
    RtRd = R.T @ command.R_d
    return (
        -gains.k_R * e_R
        - gains.k_Omega * e_Om
        + np.cross(Om, J @ Om)
        - J @ (hat(Om) @ RtRd @ command.Omega_d - RtRd @ command.Omega_d_dot)
        - M1
        - M2
    )


def control_force(state, command, gains: ControlGains, params, F1, F2):
    e_x = state.x - command.x_d
    e_v = state.v - command.v_d
    return -gains.k_x * e_x - gains.k_v * e_v + params.mass * command.a_d - F1 - F2


def second_order_gains(inertia, zeta, wn):
    """(stiffness, damping) = (I wn^2, 2 zeta wn I)."""
    if not zeta > 0 or not wn > 0:
        raise ValueError("damping ratio and natural frequency must be positive")
    if not inertia > 0:
        raise ValueError("mass/inertia must be positive")
    return inertia * wn**2, 2.0 * zeta * wn * inertia


def natural_frequency(settling_time, zeta, fraction=0.02):
    """Natural frequency giving a ``fraction`` settling envelope exp(-zeta wn t)."""
    if not settling_time > 0 or not zeta > 0:
        raise ValueError("settling time and damping ratio must be positive")
    return -np.log(fraction) / (zeta * settling_time)


def select_gains(params, zeta=DEFAULT_ZETA, wn_translation=DEFAULT_WN_TRANSLATION,
                 wn_attitude=DEFAULT_WN_ATTITUDE, settling_time=None) -> ControlGains:
    """Gains from the linearized error dynamics m e'' + k_v e' + k_x e = 0 and
    J_max e'' + k_Omega e' + k_R e = 0. ``settling_time`` overrides ``wn_translation``."""
    if settling_time is not None:
        wn_translation = natural_frequency(settling_time, zeta)
    k_x, k_v = second_order_gains(params.mass, zeta, wn_translation)
    j_max = float(np.linalg.eigvalsh(params.J).max())
    k_R, k_Om = second_order_gains(j_max, zeta, wn_attitude)
    return ControlGains(k_x, k_v, k_R, k_Om)
