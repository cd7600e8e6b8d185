"""Hat/vee maps, exponential map and related SO(3) helpers."""
import numpy as np


class NotSkewSymmetricError(ValueError):
    pass


def hat(w):
    w = np.asarray(w, dtype=np.float64)
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def vee(S, tol=1e-9):
    S = np.asarray(S, dtype=np.float64)
    if np.max(np.abs(S + S.T)) > tol * max(1.0, np.max(np.abs(S))):
        raise NotSkewSymmetricError("vee requires a skew-symmetric matrix")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def skew_part_vee(A):
    """vee of the skew-symmetric part of an arbitrary 3x3 matrix."""
    return 0.5 * np.array([A[2, 1] - A[1, 2], A[0, 2] - A[2, 0], A[1, 0] - A[0, 1]])


def expm(w):
    """Rodrigues' formula for exp(hat(w))."""
    w = np.asarray(w, dtype=np.float64)
    th2 = w @ w
    K = hat(w)
    if th2 < 1e-12:
        # Taylor terms through th**4 keep the truncation error below 1e-24
        a = 1.0 - th2 / 6.0 + th2 * th2 / 120.0
        b = 0.5 - th2 / 24.0 + th2 * th2 / 720.0
    else:
        th = np.sqrt(th2)
        a = np.sin(th) / th
        b = (1.0 - np.cos(th)) / th2
    return np.eye(3) + a * K + b * (K @ K)


def axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    return expm(angle * axis / np.linalg.norm(axis))


def dexpinv(theta, w):
    """Inverse right-trivialized tangent of exp: d/dt theta for R = R0 exp(hat(theta)), body rate w."""
    theta = np.asarray(theta, dtype=np.float64)
    th2 = theta @ theta
    c1 = np.cross(theta, w)
    c2 = np.cross(theta, c1)
    if th2 < 1e-8:
        coef = 1.0 / 12.0 + th2 / 720.0
    else:
        th = np.sqrt(th2)
        coef = (1.0 - 0.5 * th / np.tan(0.5 * th)) / th2
    return w + 0.5 * c1 + coef * c2


def orthonormality_error(R):
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def project_to_so3(R):
    U, _, Vt = np.linalg.svd(R)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def is_rotation(R, tol=1e-9):
    R = np.asarray(R)
    return R.shape == (3, 3) and orthonormality_error(R) < tol and abs(np.linalg.det(R) - 1.0) < tol
