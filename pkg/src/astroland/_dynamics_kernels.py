"""Compiled dumbbell dynamics: gravity wrench, equations of motion and the
Lie-group RK4 step. Mirrors the numpy path in ``rigid_body``.

Status codes: 0 ok, 1 collision (info = mass index), 2 non-finite.
"""
import numpy as np

from ._accel import njit
from ._kernels import OK, SINGULAR_EDGE, SINGULAR_FACE, field_loop

STEP_OK = 0
STEP_COLLISION = 1
STEP_NON_FINITE = 2


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _hat(w):
    K = np.zeros((3, 3))
    K[0, 1] = -w[2]
    K[0, 2] = w[1]
    K[1, 0] = w[2]
    K[1, 2] = -w[0]
    K[2, 0] = -w[1]
    K[2, 1] = w[0]
    return K


@njit(cache=True)
def _expm(w):
    th2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2]
    K = _hat(w)
    if th2 < 1e-12:
        a = 1.0 - th2 / 6.0 + th2 * th2 / 120.0
        b = 0.5 - th2 / 24.0 + th2 * th2 / 720.0
    else:
        th = np.sqrt(th2)
        a = np.sin(th) / th
        b = (1.0 - np.cos(th)) / th2
    return np.eye(3) + a * K + b * (K @ K)


@njit(cache=True)
def _dexpinv(theta, w):
    th2 = theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2]
    c1 = _cross(theta, w)
    c2 = _cross(theta, c1)
    if th2 < 1e-8:
        coef = 1.0 / 12.0 + th2 / 720.0
    else:
        th = np.sqrt(th2)
        coef = (1.0 - 0.5 * th / np.tan(0.5 * th)) / th2
    return w + 0.5 * c1 + coef * c2


@njit(cache=True)
def dumbbell_gravity(t, x, R, m1, m2, rho1, rho2, gravity_on, gs, spin_rate, spin_axis, RA0,
                     vertices, faces, edges, face_dyads, edge_dyads, edge_lengths,
                     eps_edge, eps_face, literal_moment):
    """(F1, F2, M1, M2, status, mass index)."""
    F1 = np.zeros(3)
    F2 = np.zeros(3)
    M1 = np.zeros(3)
    M2 = np.zeros(3)
    if not gravity_on:
        return F1, F2, M1, M2, STEP_OK, -1
    RA = _expm(spin_rate * t * spin_axis) @ RA0
    RAt = RA.T.copy()
    Rt = R.T.copy()
    for idx in range(2):
        rho = rho1 if idx == 0 else rho2
        m = m1 if idx == 0 else m2
        z = RAt @ (x + R @ rho)
        _, grad, _, wsum, status, _ = field_loop(
            z, vertices, faces, edges, face_dyads, edge_dyads, edge_lengths, 0, 0, eps_edge, eps_face
        )
        if status == SINGULAR_EDGE or status == SINGULAR_FACE or wsum > 2.0 * np.pi:
            return F1, F2, M1, M2, STEP_COLLISION, idx
        if status != OK:
            return F1, F2, M1, M2, STEP_NON_FINITE, idx
        g = gs * grad
        F = m * (RA @ g)
        if literal_moment:
            M = m * _cross(RAt @ rho, Rt @ g)
        else:
            M = _cross(rho, Rt @ F)
        if idx == 0:
            F1 = F
            M1 = M
        else:
            F2 = F
            M2 = M
    return F1, F2, M1, M2, STEP_OK, -1


@njit(cache=True)
def _rhs(t, x, v, R, Om, u_f, u_m, m1, m2, rho1, rho2, J, J_inv, gravity_on, gs, spin_rate,
         spin_axis, RA0, vertices, faces, edges, face_dyads, edge_dyads, edge_lengths,
         eps_edge, eps_face, literal_moment):
    F1, F2, M1, M2, status, info = dumbbell_gravity(
        t, x, R, m1, m2, rho1, rho2, gravity_on, gs, spin_rate, spin_axis, RA0,
        vertices, faces, edges, face_dyads, edge_dyads, edge_lengths, eps_edge, eps_face, literal_moment,
    )
    v_dot = (F1 + F2 + u_f) / (m1 + m2)
    Om_dot = J_inv @ (-_cross(Om, J @ Om) + M1 + M2 + u_m)
    return v_dot, Om_dot, status, info


@njit(cache=True)
def rk4_step(t, dt, x, v, R, Om, u_f, u_m, m1, m2, rho1, rho2, J, J_inv, gravity_on, gs,
             spin_rate, spin_axis, RA0, vertices, faces, edges, face_dyads, edge_dyads,
             edge_lengths, eps_edge, eps_face, literal_moment):
    """One Munthe-Kaas RK4 step; returns (x, v, R, Omega, status, info)."""
    args = (m1, m2, rho1, rho2, J, J_inv, gravity_on, gs, spin_rate, spin_axis, RA0,
            vertices, faces, edges, face_dyads, edge_dyads, edge_lengths, eps_edge, eps_face,
            literal_moment)
    h2 = 0.5 * dt

    a1, b1, st, info = _rhs(t, x, v, R, Om, u_f, u_m, *args)
    if st != STEP_OK:
        return x, v, R, Om, st, info
    th1 = Om.copy()

    x2 = x + h2 * v
    v2 = v + h2 * a1
    Om2 = Om + h2 * b1
    R2 = R @ _expm(h2 * th1)
    a2, b2, st, info = _rhs(t + h2, x2, v2, R2, Om2, u_f, u_m, *args)
    if st != STEP_OK:
        return x, v, R, Om, st, info
    th2 = _dexpinv(h2 * th1, Om2)

    x3 = x + h2 * v2
    v3 = v + h2 * a2
    Om3 = Om + h2 * b2
    R3 = R @ _expm(h2 * th2)
    a3, b3, st, info = _rhs(t + h2, x3, v3, R3, Om3, u_f, u_m, *args)
    if st != STEP_OK:
        return x, v, R, Om, st, info
    th3 = _dexpinv(h2 * th2, Om3)

    x4 = x + dt * v3
    v4 = v + dt * a3
    Om4 = Om + dt * b3
    R4 = R @ _expm(dt * th3)
    a4, b4, st, info = _rhs(t + dt, x4, v4, R4, Om4, u_f, u_m, *args)
    if st != STEP_OK:
        return x, v, R, Om, st, info
    th4 = _dexpinv(dt * th3, Om4)

    s = dt / 6.0
    xn = x + s * (v + 2.0 * v2 + 2.0 * v3 + v4)
    vn = v + s * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    Omn = Om + s * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    Rn = R @ _expm(s * (th1 + 2.0 * th2 + 2.0 * th3 + th4))
    ok = True
    for i in range(3):
        ok = ok and np.isfinite(xn[i]) and np.isfinite(vn[i]) and np.isfinite(Omn[i])
        for j in range(3):
            ok = ok and np.isfinite(Rn[i, j])
    if not ok:
        return x, v, R, Om, STEP_NON_FINITE, -1
    return xn, vn, Rn, Omn, STEP_OK, -1
