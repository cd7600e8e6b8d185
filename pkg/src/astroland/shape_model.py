"""Triangle-mesh ingestion, topology and the position-independent dyads.

All lengths are stored in meters. OBJ files declaring ``# units km`` in a
comment line are scaled on load.
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CACHE_MAGIC = b"ASTRMESH"
CACHE_VERSION = 1
CACHE_SUFFIX = ".amc"

_UNIT_SCALE = {"m": 1.0, "km": 1000.0}


class MeshError(ValueError):
    """Raised for malformed files and meshes that are not closed oriented 2-manifolds."""


class MeshParseError(MeshError):
    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.path = path


class EulerCharacteristicWarning(UserWarning):
    pass


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TriangleMesh:
    """Vertices (V, 3) in meters and faces (F, 3), counterclockwise about the outward normal."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        f = np.asarray(self.faces)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must have shape (V, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError("non-triangular face: faces must have shape (F, 3)")
        if not np.all(np.isfinite(v)):
            raise MeshError("vertices contain non-finite coordinates")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            bad = int(np.nonzero((f < 0) | (f >= len(v)))[0][0])
            raise MeshError(f"face {bad}: vertex index out of range")
        if f.size:
            dup = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            if dup.any():
                raise MeshError(f"face {int(np.nonzero(dup)[0][0])}: repeated vertex index")
        object.__setattr__(self, "vertices", _frozen(v, np.float64))
        object.__setattr__(self, "faces", _frozen(f, np.int64))

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def face_points(self):
        return self.vertices[self.faces]

    def signed_volume(self):
        """Volume by the divergence theorem; positive for outward orientation."""
        p = self.face_points()
        return float(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)

    def centroid(self):
        p = self.face_points()
        dets = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2]))
        return (dets[:, None] * p.sum(axis=1)).sum(axis=0) / (4.0 * dets.sum())

    def max_radius(self):
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def bounding_diagonal(self):
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))


@dataclass(frozen=True)
class PolyhedronTopology:
    """Unique edges with their adjacent faces plus all unit normals.

    ``edges[e] = (i, j)`` with ``i < j``; ``edge_faces[e] = (A, B)`` where the
    edge runs i->j in face A and j->i in face B. ``edge_normals[e, 0]`` is the
    in-plane outward normal of the edge within A, ``edge_normals[e, 1]`` within B.
    """

    mesh: TriangleMesh
    edges: np.ndarray
    edge_faces: np.ndarray
    face_normals: np.ndarray
    edge_normals: np.ndarray
    face_areas: np.ndarray

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def euler_characteristic(self):
        return self.mesh.n_vertices - self.n_edges + self.mesh.n_faces


@dataclass(frozen=True)
class DyadCache:
    topology: PolyhedronTopology
    face_dyads: np.ndarray
    edge_dyads: np.ndarray
    edge_lengths: np.ndarray

    @property
    def mesh(self):
        return self.topology.mesh


# ---------------------------------------------------------------------------
# ingestion


def load_mesh(path, units=None) -> TriangleMesh:
    """Load an OBJ file or a binary mesh cache. ``units`` overrides the OBJ header."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"mesh file not found: {path}")
    with open(path, "rb") as fh:
        head = fh.read(len(CACHE_MAGIC))
    if head == CACHE_MAGIC:
        return load_mesh_cache(path)
    return parse_obj(path.read_text(encoding="utf-8"), path=path, units=units)


def parse_obj(text, path=None, units=None) -> TriangleMesh:
    """Parse the ``v``/``f`` subset of Wavefront OBJ (1-based indices)."""
    if units is not None and units not in _UNIT_SCALE:
        raise MeshError(f"unknown units {units!r}")
    scale = 1.0
    vertices = []
    faces = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            words = line[1:].split()
            if len(words) >= 2 and words[0].lower() == "units":
                unit = words[1].lower()
                if unit not in _UNIT_SCALE:
                    raise MeshParseError(f"unknown units {words[1]!r}", lineno, path)
                scale = _UNIT_SCALE[unit]
            continue
        words = line.split()
        tag = words[0]
        if tag == "v":
            if len(words) < 4:
                raise MeshParseError("vertex record needs 3 coordinates", lineno, path)
            try:
                vertices.append([float(w) for w in words[1:4]])
            except ValueError as exc:
                raise MeshParseError(f"bad vertex coordinate: {exc}", lineno, path) from None
        elif tag == "f":
            if len(words) != 4:
                raise MeshParseError(
                    f"non-triangular face with {len(words) - 1} vertices", lineno, path
                )
            try:
                idx = [int(w.split("/")[0]) for w in words[1:]]
            except ValueError as exc:
                raise MeshParseError(f"bad face index: {exc}", lineno, path) from None
            for i in idx:
                if i < 1 or i > len(vertices):
                    raise MeshParseError(f"vertex index {i} out of range", lineno, path)
            faces.append([i - 1 for i in idx])
        # normals, texture coordinates, groups and smoothing records are ignored
    if not faces:
        raise MeshParseError("no faces found", None, path)
    if units is not None:
        scale = _UNIT_SCALE[units]
    return TriangleMesh(np.array(vertices) * scale, np.array(faces, dtype=np.int64))


def write_obj(mesh: TriangleMesh, path, units="m"):
    scale = _UNIT_SCALE[units]
    lines = [f"# units {units}"]
    lines += [f"v {x / scale:.17g} {y / scale:.17g} {z / scale:.17g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_mesh_cache(mesh: TriangleMesh, path):
    """Binary layout (little endian): magic, u8 version, u32 V, u32 F, f64[V*3], i32[F*3]."""
    header = CACHE_MAGIC + struct.pack("<BII", CACHE_VERSION, mesh.n_vertices, mesh.n_faces)
    body = mesh.vertices.astype("<f8").tobytes() + mesh.faces.astype("<i4").tobytes()
    Path(path).write_bytes(header + body)


def load_mesh_cache(path) -> TriangleMesh:
    data = Path(path).read_bytes()
    n = len(CACHE_MAGIC)
    if data[:n] != CACHE_MAGIC:
        raise MeshParseError("bad magic header", None, path)
    version, nv, nf = struct.unpack_from("<BII", data, n)
    if version != CACHE_VERSION:
        raise MeshParseError(f"unsupported cache version {version}", None, path)
    off = n + struct.calcsize("<BII")
    expected = off + 24 * nv + 12 * nf
    if len(data) != expected:
        raise MeshParseError(f"truncated cache: {len(data)} bytes, expected {expected}", None, path)
    v = np.frombuffer(data, "<f8", nv * 3, off).reshape(nv, 3)
    f = np.frombuffer(data, "<i4", nf * 3, off + 24 * nv).reshape(nf, 3)
    return TriangleMesh(v.astype(np.float64), f.astype(np.int64))


# ---------------------------------------------------------------------------
# topology and dyads


def build_topology(mesh: TriangleMesh) -> PolyhedronTopology:
    faces = mesh.faces
    p = mesh.face_points()
    nf = len(faces)

    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 1])
    norm = np.linalg.norm(cross, axis=1)
    area_tol = 1e-12 * mesh.bounding_diagonal() ** 2
    bad = np.nonzero(0.5 * norm < area_tol)[0]
    if len(bad):
        raise MeshError(f"zero-area face {int(bad[0])}")
    face_normals = cross / norm[:, None]

    # directed half-edges: (v_k -> v_{k+1}) of face f, k = 0, 1, 2
    tail = faces
    head = np.roll(faces, -1, axis=1)
    directed = {}
    for f in range(nf):
        for k in range(3):
            key = (int(tail[f, k]), int(head[f, k]))
            if key in directed:
                raise MeshError(
                    f"inconsistent winding: directed edge {key} used by faces "
                    f"{directed[key][0]} and {f}"
                )
            directed[key] = (f, k)

    pairs = {}
    for (i, j), fk in directed.items():
        pairs.setdefault((min(i, j), max(i, j)), []).append(((i, j), fk))
    edges = sorted(pairs)
    for key in edges:
        if len(pairs[key]) != 2:
            raise MeshError(
                f"open mesh: edge {key} is shared by {len(pairs[key])} face(s), expected 2"
            )

    ne = len(edges)
    edge_arr = np.array(edges, dtype=np.int64).reshape(ne, 2)
    edge_faces = np.empty((ne, 2), dtype=np.int64)
    edge_normals = np.empty((ne, 2, 3))
    v = mesh.vertices
    for e, (i, j) in enumerate(edges):
        fa, _ = directed[(i, j)]
        fb, _ = directed[(j, i)]
        edge_faces[e] = fa, fb
        na = np.cross(v[j] - v[i], face_normals[fa])
        nb = np.cross(v[i] - v[j], face_normals[fb])
        edge_normals[e, 0] = na / np.linalg.norm(na)
        edge_normals[e, 1] = nb / np.linalg.norm(nb)

    if mesh.signed_volume() <= 0.0:
        raise MeshError("faces are wound clockwise about the outward normal (negative volume)")

    chi = mesh.n_vertices - ne + nf
    if chi != 2:
        warnings.warn(
            f"Euler characteristic V - E + F = {chi}, expected 2 for a genus-0 body",
            EulerCharacteristicWarning,
            stacklevel=2,
        )

    return PolyhedronTopology(
        mesh=mesh,
        edges=_frozen(edge_arr, np.int64),
        edge_faces=_frozen(edge_faces, np.int64),
        face_normals=_frozen(face_normals, np.float64),
        edge_normals=_frozen(edge_normals, np.float64),
        face_areas=_frozen(0.5 * norm, np.float64),
    )


def build_dyads(topology: PolyhedronTopology) -> DyadCache:
    nf = topology.face_normals
    face_dyads = np.einsum("fi,fj->fij", nf, nf)
    na = nf[topology.edge_faces[:, 0]]
    nb = nf[topology.edge_faces[:, 1]]
    edge_dyads = np.einsum("ei,ej->eij", na, topology.edge_normals[:, 0]) + np.einsum(
        "ei,ej->eij", nb, topology.edge_normals[:, 1]
    )
    v = topology.mesh.vertices
    lengths = np.linalg.norm(v[topology.edges[:, 1]] - v[topology.edges[:, 0]], axis=1)
    return DyadCache(
        topology=topology,
        face_dyads=_frozen(face_dyads, np.float64),
        edge_dyads=_frozen(edge_dyads, np.float64),
        edge_lengths=_frozen(lengths, np.float64),
    )


def surface_radius_along(mesh: TriangleMesh, direction) -> float:
    """Largest distance from the origin at which the ray along ``direction`` leaves the mesh."""
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    p = mesh.face_points()
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    h = np.cross(d, e2)
    a = np.einsum("ij,ij->i", e1, h)
    ok = np.abs(a) > 1e-300
    inv = np.where(ok, 1.0 / np.where(ok, a, 1.0), 0.0)
    s = -p[:, 0]
    u = inv * np.einsum("ij,ij->i", s, h)
    q = np.cross(s, e1)
    w = inv * (q @ d)
    t = inv * np.einsum("ij,ij->i", e2, q)
    tol = 1e-12
    hit = ok & (u >= -tol) & (w >= -tol) & (u + w <= 1 + tol) & (t > 0)
    if not hit.any():
        return 0.0
    return float(t[hit].max())


# ---------------------------------------------------------------------------
# built-in shapes


def cube_mesh(side=1.0, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    h = 0.5 * side
    v = np.array(
        [
            [-h, -h, -h], [h, -h, -h], [h, h, -h], [-h, h, -h],
            [-h, -h, h], [h, -h, h], [h, h, h], [-h, h, h],
        ]
    ) + np.asarray(center, dtype=np.float64)
    f = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # -z
            [4, 5, 6], [4, 6, 7],  # +z
            [0, 1, 5], [0, 5, 4],  # -y
            [2, 3, 7], [2, 7, 6],  # +y
            [1, 2, 6], [1, 6, 5],  # +x
            [0, 4, 7], [0, 7, 3],  # -x
        ]
    )
    return TriangleMesh(v, f)


def tetrahedron_mesh(scale=1.0) -> TriangleMesh:
    v = scale * np.array([[1.0, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return TriangleMesh(v, f)


def ellipsoid_mesh(semi_axes, n_lon=8, n_lat=5) -> TriangleMesh:
    """Latitude/longitude triangulation of an ellipsoid; 2*n_lon*(n_lat-1) faces."""
    a, b, c = semi_axes
    verts = [[0.0, 0.0, c]]
    for k in range(1, n_lat):
        theta = np.pi * k / n_lat
        for m in range(n_lon):
            phi = 2 * np.pi * m / n_lon
            verts.append([a * np.sin(theta) * np.cos(phi), b * np.sin(theta) * np.sin(phi), c * np.cos(theta)])
    verts.append([0.0, 0.0, -c])
    south = len(verts) - 1

    def ring(k, m):
        return 1 + (k - 1) * n_lon + (m % n_lon)

    faces = []
    for m in range(n_lon):
        faces.append([0, ring(1, m), ring(1, m + 1)])
    for k in range(1, n_lat - 1):
        for m in range(n_lon):
            a0, a1 = ring(k, m), ring(k, m + 1)
            b0, b1 = ring(k + 1, m), ring(k + 1, m + 1)
            faces.append([a0, b0, b1])
            faces.append([a0, b1, a1])
    for m in range(n_lon):
        faces.append([south, ring(n_lat - 1, m + 1), ring(n_lat - 1, m)])
    return TriangleMesh(np.array(verts), np.array(faces))


def data_path(name) -> Path:
    return Path(__file__).with_name("data") / name
