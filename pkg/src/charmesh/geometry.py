"""Core mesh, plane and discrete-operator types shared by the whole pipeline.

Conventions: the drawing plane is z=0, the viewer looks along -z (so larger z
is closer to the viewer), and all 2D annotation coordinates are normalized to
the drawing's bounding square before any geometry is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class GeometryError(ValueError):
    """Raised when a mesh or plane violates a structural precondition."""


def _as_points(a, dim):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.shape[-1] != dim:
        raise GeometryError(f"expected {dim}D points, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise GeometryError("points contain non-finite components")
    return a


def project_xy(points):
    """Orthogonal projection onto the drawing plane: (x, y, z) -> (x, y)."""
    points = np.asarray(points, dtype=np.float64)
    return points[..., :2].copy()


@dataclass(frozen=True)
class Plane:
    """Plane a*x + b*y + c*z + d = 0 with unit normal (a, b, c)."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(n)
        if not np.isfinite(norm) or norm < 1e-12:
            raise GeometryError("plane normal must be nonzero and finite")
        object.__setattr__(self, "normal", n / norm)
        object.__setattr__(self, "offset", float(self.offset) / norm)
        self.normal.setflags(write=False)

    @classmethod
    def drawing_plane(cls):
        return cls(normal=np.array([0.0, 0.0, 1.0]), offset=0.0)

    @classmethod
    def from_point_normal(cls, point, normal):
        n = np.asarray(normal, dtype=np.float64).reshape(3)
        p = np.asarray(point, dtype=np.float64).reshape(3)
        return cls(normal=n, offset=-float(np.dot(n / np.linalg.norm(n), p)))

    def signed_distance(self, points):
        points = np.asarray(points, dtype=np.float64)
        return points @ self.normal + self.offset

    def as_tuple(self):
        return (*self.normal.tolist(), self.offset)


def reflect_about_plane(points, plane: Plane):
    """Mirror points across the plane: p - 2*(n.p + d)*n. An involution."""
    pts = np.asarray(points, dtype=np.float64)
    dist = plane.signed_distance(pts)
    return pts - 2.0 * np.multiply.outer(dist, plane.normal)


def rotation_about_axis(axis_point, axis_dir, angle):
    """Rigid rotation (R, t) by `angle` about the line through axis_point."""
    k = np.asarray(axis_dir, dtype=np.float64).reshape(3)
    k = k / np.linalg.norm(k)
    p0 = np.asarray(axis_point, dtype=np.float64).reshape(3)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    rot = np.eye(3) + np.sin(angle) * kx + (1 - np.cos(angle)) * (kx @ kx)
    trans = p0 - rot @ p0
    return rot, trans


def uniform_laplacian(n_vertices, edges):
    """Uniform (umbrella) graph Laplacian L = I - D^-1 A as a sparse CSR.

    L(x)_i = x_i - mean of x over the neighbors of i. Raises on isolated
    vertices because the mean is undefined there.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    i = np.concatenate([edges[:, 0], edges[:, 1]])
    j = np.concatenate([edges[:, 1], edges[:, 0]])
    adj = sp.csr_matrix(
        (np.ones(len(i)), (i, j)), shape=(n_vertices, n_vertices)
    )
    deg = np.asarray(adj.sum(axis=1)).ravel()
    if (deg == 0).any():
        bad = int(np.nonzero(deg == 0)[0][0])
        raise GeometryError(f"vertex {bad} is isolated (degree 0)")
    inv_deg = sp.diags(1.0 / deg)
    return (sp.identity(n_vertices, format="csr") - inv_deg @ adj).tocsr()


def graph_laplacian(mesh, values):
    """Apply the uniform graph Laplacian of `mesh` to a per-vertex field."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != mesh.n_vertices:
        raise GeometryError("field must be defined on every vertex")
    return mesh.laplacian @ values


class TriangleMesh:
    """Immutable manifold triangle mesh (vertices (n,3), faces (m,3))."""

    def __init__(self, vertices, faces, *, validate=True):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        f = np.ascontiguousarray(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise GeometryError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise GeometryError(f"faces must be (m, 3), got {f.shape}")
        if not np.isfinite(v).all():
            raise GeometryError("vertices contain non-finite coordinates")
        self.vertices = v
        self.faces = f
        v.setflags(write=False)
        f.setflags(write=False)
        if validate:
            self._validate()

    def _validate(self):
        f = self.faces
        if f.size and (f.min() < 0 or f.max() >= len(self.vertices)):
            raise GeometryError("face index out of range")
        if (f[:, 0] == f[:, 1]).any() or (f[:, 1] == f[:, 2]).any() or (
            f[:, 0] == f[:, 2]
        ).any():
            raise GeometryError("face repeats a vertex")
        if self.face_areas.size and self.face_areas.min() <= 0.0:
            bad = int(np.argmin(self.face_areas))
            raise GeometryError(f"face {bad} is degenerate (zero area)")
        # Manifold + consistent orientation: every directed half edge occurs
        # at most once, every undirected edge carries at most two faces.
        he = self.halfedges
        keys = he[:, 0] * len(self.vertices) + he[:, 1]
        if len(np.unique(keys)) != len(keys):
            raise GeometryError("inconsistent orientation or non-manifold edge")
        und = np.sort(he, axis=1)
        ukeys = und[:, 0] * len(self.vertices) + und[:, 1]
        _, counts = np.unique(ukeys, return_counts=True)
        if counts.max(initial=0) > 2:
            raise GeometryError("non-manifold edge (more than two faces)")

    # -- basic sizes ------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def with_vertices(self, vertices):
        """Same connectivity, new positions (skips structural re-validation)."""
        mesh = TriangleMesh(vertices, self.faces, validate=False)
        if not np.isfinite(mesh.vertices).all():
            raise GeometryError("vertices contain non-finite coordinates")
        # Connectivity-derived caches can be shared; position caches cannot.
        for name in ("edges", "halfedges", "laplacian", "vertex_neighbors",
                     "boundary_edges", "boundary_loops"):
            if name in self.__dict__:
                mesh.__dict__[name] = self.__dict__[name]
        return mesh

    # -- connectivity ------------------------------------------------------
    @cached_property
    def halfedges(self):
        f = self.faces
        return np.concatenate(
            [f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0
        )

    @cached_property
    def edges(self):
        und = np.sort(self.halfedges, axis=1)
        return np.unique(und, axis=0)

    @cached_property
    def vertex_neighbors(self):
        nbr = [[] for _ in range(self.n_vertices)]
        for a, b in self.edges:
            nbr[a].append(b)
            nbr[b].append(a)
        return [np.array(sorted(n), dtype=np.int64) for n in nbr]

    @cached_property
    def laplacian(self):
        return uniform_laplacian(self.n_vertices, self.edges)

    @cached_property
    def boundary_edges(self):
        """Directed edges that have no opposite half edge."""
        he = self.halfedges
        n = self.n_vertices
        keys = set(he[:, 0] * n + he[:, 1])
        mask = np.array([(b * n + a) not in keys for a, b in he])
        return he[mask]

    @cached_property
    def boundary_loops(self):
        """Boundary vertex cycles, each ordered along the boundary."""
        nxt = {int(a): int(b) for a, b in self.boundary_edges}
        loops = []
        seen = set()
        for start in sorted(nxt):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            cur = nxt[start]
            while cur != start:
                if cur in seen:
                    raise GeometryError("boundary is not a disjoint set of loops")
                loop.append(cur)
                seen.add(cur)
                cur = nxt[cur]
            loops.append(np.array(loop, dtype=np.int64))
        return loops

    @property
    def is_closed(self):
        return len(self.boundary_edges) == 0

    @property
    def euler_characteristic(self):
        return self.n_vertices - len(self.edges) + self.n_faces

    # -- metric quantities -------------------------------------------------
    @cached_property
    def face_cross(self):
        v = self.vertices
        f = self.faces
        return np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])

    @cached_property
    def face_areas(self):
        return 0.5 * np.linalg.norm(self.face_cross, axis=1)

    @cached_property
    def face_normals(self):
        areas = np.linalg.norm(self.face_cross, axis=1)
        safe = np.where(areas > 0, areas, 1.0)
        return self.face_cross / safe[:, None]

    @property
    def total_area(self):
        return float(self.face_areas.sum())

    def edge_lengths(self):
        v = self.vertices
        e = self.edges
        return np.linalg.norm(v[e[:, 0]] - v[e[:, 1]], axis=1)

    def mean_edge_length(self):
        return float(self.edge_lengths().mean())


def vertex_area_normal(mesh: TriangleMesh, fallback_normal=None):
    """Per-vertex area and normal estimates.

    A_i is one third of the incident face area sum; n_i is the area-weighted
    mean of incident face normals, normalized. Vertices whose incident face
    normals cancel out (possible on degenerate flat closed meshes) take
    `fallback_normal` if given, otherwise raise.
    """
    n = mesh.n_vertices
    areas = np.zeros(n)
    normals = np.zeros((n, 3))
    weighted = mesh.face_cross * 0.5  # face normal * face area
    for k in range(3):
        np.add.at(areas, mesh.faces[:, k], mesh.face_areas)
        np.add.at(normals, mesh.faces[:, k], weighted)
    if (areas == 0).any():
        bad = int(np.nonzero(areas == 0)[0][0])
        raise GeometryError(f"vertex {bad} has no usable incident faces")
    areas /= 3.0
    norms = np.linalg.norm(normals, axis=1)
    degenerate = norms < 1e-12 * np.maximum(areas, 1e-300)
    if degenerate.any():
        if fallback_normal is None:
            bad = int(np.nonzero(degenerate)[0][0])
            raise GeometryError(
                f"vertex {bad} has cancelling incident face normals"
            )
        normals[degenerate] = np.asarray(fallback_normal, dtype=np.float64)
        norms = np.linalg.norm(normals, axis=1)
    return areas, normals / norms[:, None]


# Projection-constraint provenance inside a part's constraint set.
CONSTRAINT_OUTLINE = "outline"
CONSTRAINT_LANDMARK = "landmark"
CONSTRAINT_MIDLINE = "midline"


@dataclass(frozen=True)
class ProjectionConstraints:
    """Vertices whose drawing-plane projections are pinned to 2D targets."""

    ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    targets: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    kinds: tuple = ()

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)
        targets = _as_points(self.targets, 2) if len(self.ids) else np.zeros((0, 2))
        if len(ids) != len(targets) or len(ids) != len(self.kinds):
            raise GeometryError("constraint arrays must have equal length")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "kinds", tuple(self.kinds))
        ids.setflags(write=False)
        targets.setflags(write=False)

    def __len__(self):
        return len(self.ids)

    def replace_kind(self, kind, ids, targets):
        """Drop every entry of `kind` and append the given ones."""
        keep = [k != kind for k in self.kinds]
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        targets = np.asarray(targets, dtype=np.float64).reshape(-1, 2)
        return ProjectionConstraints(
            ids=np.concatenate([self.ids[keep], ids]),
            targets=np.concatenate([self.targets[keep], targets]),
            kinds=tuple(np.array(self.kinds)[keep]) + (kind,) * len(ids),
        )

    def append(self, kind, ids, targets):
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        targets = np.asarray(targets, dtype=np.float64).reshape(-1, 2)
        return ProjectionConstraints(
            ids=np.concatenate([self.ids, ids]),
            targets=np.concatenate([self.targets, targets]),
            kinds=self.kinds + (kind,) * len(ids),
        )


@dataclass(frozen=True)
class SymmetricPartMesh:
    """A closed part mesh with its bilateral symmetry bookkeeping.

    `pairs` holds index pairs mirrored about `plane`; `midline` holds the
    vertices constrained to lie in the plane (one or more closed loops,
    concatenated in loop order with `midline_loop_sizes` recording the splits).
    Every vertex is in exactly one pair or on the midline.
    """

    mesh: TriangleMesh
    plane: Plane
    pairs: np.ndarray
    midline: np.ndarray
    midline_loop_sizes: tuple
    constraints: ProjectionConstraints = field(default_factory=ProjectionConstraints)
    thickness: float = 1.0
    target_laplacians: np.ndarray | None = None
    target_edge_lengths: np.ndarray | None = None

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        midline = np.asarray(self.midline, dtype=np.int64).reshape(-1)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "midline", midline)
        pairs.setflags(write=False)
        midline.setflags(write=False)
        if self.thickness <= 0:
            raise GeometryError("thickness must be positive")
        counts = np.zeros(self.mesh.n_vertices, dtype=np.int64)
        np.add.at(counts, pairs.ravel(), 1)
        np.add.at(counts, midline, 1)
        if (counts != 1).any():
            raise GeometryError(
                "pair set and midline must cover every vertex exactly once"
            )
        if sum(self.midline_loop_sizes) != len(midline):
            raise GeometryError("midline loop sizes do not sum to loop length")

    @property
    def pair_map(self):
        """sigma[i] = mirror partner of i (identity on the midline)."""
        sigma = np.arange(self.mesh.n_vertices)
        sigma[self.pairs[:, 0]] = self.pairs[:, 1]
        sigma[self.pairs[:, 1]] = self.pairs[:, 0]
        return sigma

    def midline_loops(self):
        out = []
        start = 0
        for size in self.midline_loop_sizes:
            out.append(self.midline[start:start + size])
            start += size
        return out

    def validate_symmetric_connectivity(self):
        """Check faces map to faces under the pair map (orientation flipped)."""
        sigma = self.pair_map
        face_set = {tuple(sorted(f)) for f in self.mesh.faces.tolist()}
        for f in self.mesh.faces:
            mirrored = tuple(sorted(sigma[f].tolist()))
            if mirrored not in face_set:
                raise GeometryError("connectivity is not symmetric under pairing")

    def symmetry_residual(self):
        """Max distance between reflected pair partners, plus midline offset."""
        v = self.mesh.vertices
        if len(self.pairs):
            reflected = reflect_about_plane(v[self.pairs[:, 0]], self.plane)
            pair_err = float(
                np.abs(reflected - v[self.pairs[:, 1]]).max()
            )
        else:
            pair_err = 0.0
        mid_err = float(
            np.abs(self.plane.signed_distance(v[self.midline])).max()
        ) if len(self.midline) else 0.0
        return pair_err, mid_err

    def replace(self, **changes):
        return replace(self, **changes)


def angle_between(a, b):
    """Angle in radians between two vectors, both normalized first."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise GeometryError("angle undefined for zero vector")
    cosang = np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0)
    return float(np.arccos(cosang))


def normal_deviation(reference, estimate):
    """Angle of an estimated direction against a reference assumed unit.

    Only the estimate is normalized; use this to score how far an estimated
    plane normal drifted from a known ground-truth direction.
    """
    ref = np.asarray(reference, dtype=np.float64).reshape(-1)
    est = np.asarray(estimate, dtype=np.float64).reshape(-1)
    nb = np.linalg.norm(est)
    if nb == 0:
        raise GeometryError("angle undefined for zero vector")
    return float(np.arccos(np.clip(np.dot(ref, est) / nb, -1.0, 1.0)))
