"""Constant-density polyhedron gravity: potential, attraction, gradient matrix, Laplacian."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._accel import requested_backend
from .shape_model import DyadCache, TriangleMesh, build_dyads, build_topology

G_UNIVERSAL = 6.67430e-11


class GravityError(RuntimeError):
    pass


class SingularityError(GravityError):
    """Field point on an edge or inside a face; ``kind`` is 'edge' or 'face'."""

    def __init__(self, kind, index):
        super().__init__(f"field point is on {kind} {index} of the polyhedron")
        self.kind = kind
        self.index = index


class NonFiniteFieldError(GravityError):
    pass


class AmbiguousClassificationError(GravityError):
    pass


class Region(enum.Enum):
    EXTERIOR = "exterior"
    INTERIOR = "interior"


@dataclass(frozen=True)
class FieldEvaluation:
    potential: float
    attraction: np.ndarray
    gradient_matrix: np.ndarray
    laplacian: float

    def to_dict(self):
        return {
            "potential": self.potential,
            "attraction": self.attraction.tolist(),
            "gradient_matrix": self.gradient_matrix.tolist(),
            "laplacian": self.laplacian,
        }


@dataclass(frozen=True)
class GravityModel:
    dyads: DyadCache
    density: float
    G: float = G_UNIVERSAL
    eps_edge: float = field(init=False)
    eps_face: float = field(init=False)

    def __post_init__(self):
        if not self.G > 0 or not self.density > 0:
            raise ValueError("G and density must be positive")
        diag = self.mesh.bounding_diagonal()
        object.__setattr__(self, "eps_edge", 1e-10 * diag)
        # atan2 arguments scale as length**3
        object.__setattr__(self, "eps_face", 1e-30 * diag**3)

    @classmethod
    def from_mesh(cls, mesh: TriangleMesh, density, G=G_UNIVERSAL):
        return cls(build_dyads(build_topology(mesh)), float(density), float(G))

    @property
    def mesh(self):
        return self.dyads.mesh

    @property
    def volume(self):
        return self.mesh.signed_volume()

    @property
    def mass(self):
        return self.density * self.volume

    @property
    def mu(self):
        return self.G * self.mass

    def _raw(self, r, face_anchor=0, edge_anchor=0, backend=None):
        backend = backend or requested_backend()
        kernel = _kernels.field_loop if backend == "numba" else _kernels.field_vectorized
        d = self.dyads
        out = kernel(
            np.asarray(r, dtype=np.float64),
            self.mesh.vertices,
            self.mesh.faces,
            d.topology.edges,
            d.face_dyads,
            d.edge_dyads,
            d.edge_lengths,
            face_anchor,
            edge_anchor,
            self.eps_edge,
            self.eps_face,
        )
        pot, grad, hess, wsum, status, index = out
        if status == _kernels.SINGULAR_EDGE:
            raise SingularityError("edge", int(index))
        if status == _kernels.SINGULAR_FACE:
            raise SingularityError("face", int(index))
        if status == _kernels.NON_FINITE:
            raise NonFiniteFieldError(f"non-finite field at {np.asarray(r).tolist()}")
        return pot, grad, hess, wsum

    def evaluate(self, r, face_anchor=0, edge_anchor=0, backend=None) -> FieldEvaluation:
        """Field at body-frame point ``r``.

        ``face_anchor`` (0..2) and ``edge_anchor`` (0..1) pick which vertex of each
        face/edge supplies the anchor vector; the result does not depend on them.
        """
        pot, grad, hess, wsum = self._raw(r, face_anchor, edge_anchor, backend)
        gs = self.G * self.density
        return FieldEvaluation(
            potential=gs * pot,
            attraction=gs * np.asarray(grad),
            gradient_matrix=gs * np.asarray(hess),
            laplacian=-gs * wsum,
        )

    def attraction(self, r):
        return self.evaluate(r).attraction

    def potential(self, r):
        return self.evaluate(r).potential

    def winding_number(self, r):
        """Total solid angle over 4*pi: 1 inside, 0 outside."""
        return self._raw(r)[3] / (4.0 * np.pi)

    def classify(self, r, tol=1e-6, surface_eps=None) -> Region:
        """Interior/exterior from the Laplacian; points on or within ``surface_eps`` of the surface are Interior."""
        surface_eps = self.eps_edge if surface_eps is None else surface_eps
        try:
            w = self.winding_number(r)
        except SingularityError:
            return Region.INTERIOR
        if abs(w) < tol:
            return Region.EXTERIOR
        if abs(w - 1.0) < tol:
            return Region.INTERIOR
        if distance_to_surface(self.mesh, r) <= surface_eps:
            return Region.INTERIOR
        raise AmbiguousClassificationError(
            f"Laplacian at {np.asarray(r).tolist()} is {w:.6g} x (-4 pi G sigma)"
        )


def edge_factor(r_i, r_j, e_ij, eps=0.0):
    """Logarithmic per-edge factor. ``r_i``, ``r_j`` are the vectors from the field point to
    the edge endpoints (or their lengths); ``e_ij`` is the edge length."""
    r_i = float(np.linalg.norm(r_i))
    r_j = float(np.linalg.norm(r_j))
    if r_i + r_j - e_ij <= eps:
        raise SingularityError("edge", -1)
    return float(_kernels.edge_factor(r_i, r_j, e_ij))


def face_factor(r_i, r_j, r_k, eps=0.0):
    """Signed solid angle of the triangle (r_i, r_j, r_k) seen from the origin."""
    num, den = _kernels.face_factor(np.asarray(r_i, float), np.asarray(r_j, float), np.asarray(r_k, float))
    if abs(num) <= eps and abs(den) <= eps:
        raise SingularityError("face", -1)
    return float(2.0 * np.arctan2(num, den))


def _point_triangle_distance(p, a, b, c):
    # closest point on triangle, Ericson's region classification
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return np.linalg.norm(ap)
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return np.linalg.norm(bp)
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        return np.linalg.norm(p - (a + d1 / (d1 - d3) * ab))
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return np.linalg.norm(cp)
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        return np.linalg.norm(p - (a + d2 / (d2 - d6) * ac))
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return np.linalg.norm(p - (b + w * (c - b)))
    denom = 1.0 / (va + vb + vc)
    v, w = vb * denom, vc * denom
    return np.linalg.norm(p - (a + ab * v + ac * w))


def distance_to_surface(mesh: TriangleMesh, r):
    p = np.asarray(r, dtype=np.float64)
    tri = mesh.face_points()
    return float(min(_point_triangle_distance(p, *t) for t in tri))
