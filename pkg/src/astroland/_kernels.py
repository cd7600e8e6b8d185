"""Polyhedron field kernels: a scalar-loop version compiled with numba and a
vectorized numpy version. Both return unscaled sums; multiply by G*sigma.

Status codes: 0 ok, 1 singular edge, 2 singular face, 3 non-finite result.
"""
import numpy as np

from ._accel import njit

OK = 0
SINGULAR_EDGE = 1
SINGULAR_FACE = 2
NON_FINITE = 3


@njit(cache=True, fastmath=False)
def field_loop(point, vertices, faces, edges, face_dyads, edge_dyads, edge_lengths,
               face_anchor, edge_anchor, eps_edge, eps_face):
    # returns (potential, attraction[3], hessian[3,3], omega_sum, status, index)
    nv = vertices.shape[0]
    rv = np.empty((nv, 3))
    rn = np.empty(nv)
    for a in range(nv):
        x = vertices[a, 0] - point[0]
        y = vertices[a, 1] - point[1]
        z = vertices[a, 2] - point[2]
        rv[a, 0] = x
        rv[a, 1] = y
        rv[a, 2] = z
        rn[a] = np.sqrt(x * x + y * y + z * z)

    pot = 0.0
    grad = np.zeros(3)
    hess = np.zeros((3, 3))
    wsum = 0.0

    for e in range(edges.shape[0]):
        i = edges[e, 0]
        j = edges[e, 1]
        le = edge_lengths[e]
        s = rn[i] + rn[j]
        if s - le < eps_edge:
            return pot, grad, hess, wsum, SINGULAR_EDGE, e
        L = np.log((s + le) / (s - le))
        a = i if edge_anchor == 0 else j
        E = edge_dyads[e]
        r0 = rv[a, 0]
        r1 = rv[a, 1]
        r2 = rv[a, 2]
        Er0 = E[0, 0] * r0 + E[0, 1] * r1 + E[0, 2] * r2
        Er1 = E[1, 0] * r0 + E[1, 1] * r1 + E[1, 2] * r2
        Er2 = E[2, 0] * r0 + E[2, 1] * r1 + E[2, 2] * r2
        pot += (r0 * Er0 + r1 * Er1 + r2 * Er2) * L
        grad[0] -= Er0 * L
        grad[1] -= Er1 * L
        grad[2] -= Er2 * L
        for p in range(3):
            for q in range(3):
                hess[p, q] += E[p, q] * L

    for f in range(faces.shape[0]):
        i = faces[f, 0]
        j = faces[f, 1]
        k = faces[f, 2]
        xi, yi, zi = rv[i, 0], rv[i, 1], rv[i, 2]
        xj, yj, zj = rv[j, 0], rv[j, 1], rv[j, 2]
        xk, yk, zk = rv[k, 0], rv[k, 1], rv[k, 2]
        cx = yj * zk - zj * yk
        cy = zj * xk - xj * zk
        cz = xj * yk - yj * xk
        num = xi * cx + yi * cy + zi * cz
        ri, rj, rk = rn[i], rn[j], rn[k]
        den = (ri * rj * rk
               + ri * (xj * xk + yj * yk + zj * zk)
               + rj * (xk * xi + yk * yi + zk * zi)
               + rk * (xi * xj + yi * yj + zi * zj))
        if abs(num) < eps_face and abs(den) < eps_face:
            return pot, grad, hess, wsum, SINGULAR_FACE, f
        w = 2.0 * np.arctan2(num, den)
        a = faces[f, face_anchor]
        F = face_dyads[f]
        r0 = rv[a, 0]
        r1 = rv[a, 1]
        r2 = rv[a, 2]
        Fr0 = F[0, 0] * r0 + F[0, 1] * r1 + F[0, 2] * r2
        Fr1 = F[1, 0] * r0 + F[1, 1] * r1 + F[1, 2] * r2
        Fr2 = F[2, 0] * r0 + F[2, 1] * r1 + F[2, 2] * r2
        pot -= (r0 * Fr0 + r1 * Fr1 + r2 * Fr2) * w
        grad[0] += Fr0 * w
        grad[1] += Fr1 * w
        grad[2] += Fr2 * w
        for p in range(3):
            for q in range(3):
                hess[p, q] -= F[p, q] * w
        wsum += w

    pot *= 0.5
    if not (np.isfinite(pot) and np.isfinite(wsum)):
        return pot, grad, hess, wsum, NON_FINITE, -1
    return pot, grad, hess, wsum, OK, -1


def field_vectorized(point, vertices, faces, edges, face_dyads, edge_dyads, edge_lengths,
                     face_anchor, edge_anchor, eps_edge, eps_face):
    rv = vertices - point
    rn = np.sqrt(np.einsum("ij,ij->i", rv, rv))

    s = rn[edges[:, 0]] + rn[edges[:, 1]]
    gap = s - edge_lengths
    if np.any(gap < eps_edge):
        e = int(np.nonzero(gap < eps_edge)[0][0])
        return 0.0, np.zeros(3), np.zeros((3, 3)), 0.0, SINGULAR_EDGE, e
    L = np.log((s + edge_lengths) / gap)
    re = rv[edges[:, edge_anchor]]
    Er = np.einsum("eij,ej->ei", edge_dyads, re)

    ri, rj, rk = rv[faces[:, 0]], rv[faces[:, 1]], rv[faces[:, 2]]
    ni, nj, nk = rn[faces[:, 0]], rn[faces[:, 1]], rn[faces[:, 2]]
    num = np.einsum("ij,ij->i", ri, np.cross(rj, rk))
    den = (ni * nj * nk
           + ni * np.einsum("ij,ij->i", rj, rk)
           + nj * np.einsum("ij,ij->i", rk, ri)
           + nk * np.einsum("ij,ij->i", ri, rj))
    sing = (np.abs(num) < eps_face) & (np.abs(den) < eps_face)
    if np.any(sing):
        f = int(np.nonzero(sing)[0][0])
        return 0.0, np.zeros(3), np.zeros((3, 3)), 0.0, SINGULAR_FACE, f
    w = 2.0 * np.arctan2(num, den)
    rf = rv[faces[:, face_anchor]]
    Fr = np.einsum("fij,fj->fi", face_dyads, rf)

    pot = 0.5 * (np.einsum("ei,ei->e", re, Er) @ L - np.einsum("fi,fi->f", rf, Fr) @ w)
    grad = -(L @ Er) + w @ Fr
    hess = np.einsum("eij,e->ij", edge_dyads, L) - np.einsum("fij,f->ij", face_dyads, w)
    wsum = float(w.sum())
    if not (np.isfinite(pot) and np.isfinite(wsum)):
        return pot, grad, hess, wsum, NON_FINITE, -1
    return float(pot), grad, hess, wsum, OK, -1


def edge_factor(ri, rj, eij):
    return np.log((ri + rj + eij) / (ri + rj - eij))


def face_factor(r_i, r_j, r_k):
    ni, nj, nk = np.linalg.norm(r_i), np.linalg.norm(r_j), np.linalg.norm(r_k)
    num = np.dot(r_i, np.cross(r_j, r_k))
    den = ni * nj * nk + ni * np.dot(r_j, r_k) + nj * np.dot(r_k, r_i) + nk * np.dot(r_i, r_j)
    return num, den
