"""Build the initial closed symmetric mesh for one body part.

The half mesh is a quality triangulation of the outline region; mirroring it
across the symmetry plane and stitching along the outline yields a closed
sphere-topology mesh whose vertices are classified into mirrored pairs and a
midline loop. Rotation of the symmetry plane is inferred from landmark pairs
or an explicit drag segment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import shapely
from scipy.spatial import Delaunay
from shapely.geometry import LinearRing, Point, Polygon

from .geometry import (
    CONSTRAINT_OUTLINE,
    GeometryError,
    Plane,
    ProjectionConstraints,
    SymmetricPartMesh,
    TriangleMesh,
    project_xy,
    reflect_about_plane,
    rotation_about_axis,
)

MAX_ROTATION = np.deg2rad(80.0)  # angle mapping clamps here; poses stay non-grazing


class AnnotationError(ValueError):
    """Raised when user annotations violate their invariants."""


def _close_ring(points):
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) > 1 and np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
    return pts


@dataclass(frozen=True)
class AnnotationSet:
    """The four 2D annotation kinds for one body part.

    `outline` is a simple closed polyline (stored CCW without the repeated
    endpoint); `midline` an optional open polyline; `rotation_segment` an
    optional directed segment; `landmark_pairs` an (n, 2, 2) array of point
    pairs strictly inside the outline.
    """

    outline: np.ndarray
    midline: np.ndarray | None = None
    rotation_segment: np.ndarray | None = None
    landmark_pairs: np.ndarray | None = None
    thickness: float = 1.0

    def __post_init__(self):
        outline = _close_ring(self.outline)
        if len(np.unique(outline.round(12), axis=0)) < 3:
            raise AnnotationError("outline needs at least 3 distinct points")
        ring = LinearRing(outline)
        if not ring.is_simple or not Polygon(outline).is_valid:
            raise AnnotationError("outline must not self-intersect")
        if not ring.is_ccw:
            outline = outline[::-1].copy()
        object.__setattr__(self, "outline", outline)
        outline.setflags(write=False)

        midline = self.midline
        if midline is not None:
            midline = np.asarray(midline, dtype=np.float64).reshape(-1, 2)
            object.__setattr__(self, "midline", midline)
            midline.setflags(write=False)

        seg = self.rotation_segment
        if seg is not None:
            seg = np.asarray(seg, dtype=np.float64).reshape(2, 2)
            object.__setattr__(self, "rotation_segment", seg)
            seg.setflags(write=False)

        pairs = self.landmark_pairs
        if pairs is None or len(pairs) == 0:
            pairs = np.zeros((0, 2, 2))
        pairs = np.asarray(pairs, dtype=np.float64).reshape(-1, 2, 2)
        poly = Polygon(outline)
        for pair in pairs:
            for pt in pair:
                if not poly.contains(Point(pt)):
                    raise AnnotationError(
                        f"landmark {pt.tolist()} must lie strictly inside the outline"
                    )
        object.__setattr__(self, "landmark_pairs", pairs)
        pairs.setflags(write=False)

        if self.thickness <= 0:
            raise AnnotationError("thickness must be positive")

    @property
    def polygon(self):
        return Polygon(self.outline)


@dataclass(frozen=True)
class RotationSpec:
    """Symmetry-plane rotation: in-plane axis through a point, plus an angle."""

    axis_point: np.ndarray
    axis_direction: np.ndarray
    angle: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.axis_point, dtype=np.float64).reshape(3)
        d = np.asarray(self.axis_direction, dtype=np.float64).reshape(3)
        if abs(d[2]) > 1e-12:
            raise GeometryError("rotation axis must lie in the drawing plane")
        norm = np.linalg.norm(d)
        if norm < 1e-12:
            raise GeometryError("rotation axis direction must be nonzero")
        if not abs(self.angle) < np.pi / 2:
            raise GeometryError("rotation angle must satisfy |angle| < pi/2")
        object.__setattr__(self, "axis_point", p)
        object.__setattr__(self, "axis_direction", d / norm)
        p.setflags(write=False)
        self.axis_direction.setflags(write=False)

    @property
    def projected_plane_normal(self):
        """Direction of the rotated plane normal's drawing-plane projection."""
        d = self.axis_direction
        return np.array([d[1], -d[0]])


# ---------------------------------------------------------------------------
# Outline triangulation
# ---------------------------------------------------------------------------

def _resample_boundary(outline, spacing):
    """Subdivide each outline edge to ~spacing, keeping original corners."""
    pts = []
    k = len(outline)
    for i in range(k):
        a = outline[i]
        b = outline[(i + 1) % k]
        seg = np.linalg.norm(b - a)
        steps = max(1, int(np.ceil(seg / spacing)))
        for t in range(steps):
            pts.append(a + (b - a) * (t / steps))
    return np.asarray(pts)


def _hex_lattice(bounds, spacing):
    x0, y0, x1, y1 = bounds
    dy = spacing * np.sqrt(3) / 2
    rows = []
    y = y0
    row = 0
    while y <= y1:
        xs = np.arange(x0 + (spacing / 2 if row % 2 else 0.0), x1 + spacing, spacing)
        rows.append(np.column_stack([xs, np.full_like(xs, y)]))
        y += dy
        row += 1
    return np.concatenate(rows) if rows else np.zeros((0, 2))


def _delaunay_inside(points, polygon, area_floor):
    tri = Delaunay(points)
    simplices = tri.simplices
    d1 = points[simplices[:, 1]] - points[simplices[:, 0]]
    d2 = points[simplices[:, 2]] - points[simplices[:, 0]]
    doubled = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    keep = np.abs(doubled) > 2.0 * area_floor  # collinear-point slivers
    centroids = points[simplices].mean(axis=1)
    keep &= shapely.contains_xy(polygon, centroids[:, 0], centroids[:, 1])
    return simplices[keep]


def _mesh_attempt(outline, polygon, spacing):
    boundary = _resample_boundary(outline, spacing)
    n_bd = len(boundary)
    area_floor = 1e-10 * spacing * spacing
    clearance = 0.7 * spacing
    shrunk = polygon.buffer(-clearance)
    if shrunk.is_empty:
        interior = np.zeros((0, 2))
    else:
        lattice = _hex_lattice(polygon.bounds, spacing)
        if len(lattice):
            inside = shapely.contains_xy(shrunk, lattice[:, 0], lattice[:, 1])
            interior = lattice[inside]
        else:
            interior = np.zeros((0, 2))
    points = np.concatenate([boundary, interior])

    # Lloyd-style relaxation of interior points over the in-polygon Delaunay
    for _ in range(4):
        if not len(interior):
            break
        faces = _delaunay_inside(points, polygon, area_floor)
        nbr_sum = np.zeros((len(points), 2))
        nbr_cnt = np.zeros(len(points))
        for a, b in ((0, 1), (1, 2), (2, 0)):
            np.add.at(nbr_sum, faces[:, a], points[faces[:, b]])
            np.add.at(nbr_cnt, faces[:, a], 1)
            np.add.at(nbr_sum, faces[:, b], points[faces[:, a]])
            np.add.at(nbr_cnt, faces[:, b], 1)
        movable = np.zeros(len(points), dtype=bool)
        movable[n_bd:] = nbr_cnt[n_bd:] > 0
        proposed = points.copy()
        proposed[movable] = nbr_sum[movable] / nbr_cnt[movable, None]
        ok = shapely.contains_xy(shrunk, proposed[:, 0], proposed[:, 1])
        accept = movable & ok
        points[accept] = proposed[accept]

    faces = _delaunay_inside(points, polygon, area_floor)
    used = np.unique(faces)
    if len(used) < len(points):
        remap = -np.ones(len(points), dtype=np.int64)
        remap[used] = np.arange(len(used))
        points = points[used]
        faces = remap[faces]
        if (remap[np.arange(n_bd)] < 0).any():
            return None  # boundary sample got orphaned; retry denser
        n_bd = int((remap[:n_bd] >= 0).sum())

    verts3 = np.column_stack([points, np.zeros(len(points))])
    # enforce CCW faces (+z normals)
    d1 = points[faces[:, 1]] - points[faces[:, 0]]
    d2 = points[faces[:, 2]] - points[faces[:, 0]]
    flip = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    try:
        mesh = TriangleMesh(verts3, faces)
    except GeometryError:
        return None
    # the mesh boundary must be exactly the resampled outline cycle
    if len(mesh.boundary_loops) != 1:
        return None
    loop = mesh.boundary_loops[0]
    if len(loop) != n_bd or sorted(loop.tolist()) != list(range(n_bd)):
        return None
    return mesh


def triangulate_outline(outline, target_count=1600):
    """Quality-triangulate the outline region into >= target_count triangles.

    The triangulation keeps the outline polyline as its exact boundary
    (outline edges may be subdivided), aims for near-uniform triangle areas,
    and relaxes interior points toward equilateral quality.
    """
    outline = _close_ring(outline)
    if len(np.unique(outline.round(12), axis=0)) < 3:
        raise AnnotationError("outline needs at least 3 distinct points")
    polygon = Polygon(outline)
    if not polygon.is_valid or not LinearRing(outline).is_simple:
        raise AnnotationError("outline must not self-intersect")
    if not LinearRing(outline).is_ccw:
        outline = outline[::-1].copy()
        polygon = Polygon(outline)
    if target_count < 1:
        raise AnnotationError("target_count must be positive")

    area = polygon.area
    spacing = np.sqrt(area / target_count * 4.0 / np.sqrt(3.0))
    best = None
    for _ in range(12):
        mesh = _mesh_attempt(outline, polygon, spacing)
        if mesh is not None:
            if mesh.n_faces >= target_count:
                return mesh
            best = mesh
            spacing *= max(0.55, 0.95 * np.sqrt(mesh.n_faces / target_count))
        else:
            spacing *= 0.75
    if best is not None and target_count <= 4:
        return best
    raise GeometryError("failed to reach the requested triangle density")


def min_interior_angles(mesh):
    """Per-face minimum interior angle in radians."""
    v = mesh.vertices
    f = mesh.faces
    angles = []
    for i in range(3):
        a = v[f[:, i]]
        b = v[f[:, (i + 1) % 3]]
        c = v[f[:, (i + 2) % 3]]
        u = b - a
        w = c - a
        cosang = (u * w).sum(1) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1)
        )
        angles.append(np.arccos(np.clip(cosang, -1, 1)))
    return np.min(angles, axis=0)


# ---------------------------------------------------------------------------
# Mirroring
# ---------------------------------------------------------------------------

def _split_boundary_chords(mesh: TriangleMesh):
    """Split interior edges whose endpoints are both on the boundary.

    Doubling a disk along its boundary turns such chords into 4-face edges;
    inserting their midpoints keeps the stitched mesh manifold.
    """
    while True:
        loops = mesh.boundary_loops
        on_boundary = np.zeros(mesh.n_vertices, dtype=bool)
        for loop in loops:
            on_boundary[loop] = True
        bd_keys = {
            (min(int(a), int(b)), max(int(a), int(b)))
            for loop in loops
            for a, b in zip(loop, np.roll(loop, -1))
        }
        chords = [
            (int(a), int(b))
            for a, b in mesh.edges
            if on_boundary[a] and on_boundary[b]
            and (min(int(a), int(b)), max(int(a), int(b))) not in bd_keys
        ]
        if not chords:
            return mesh
        vertices = [mesh.vertices]
        faces = mesh.faces.tolist()
        next_id = mesh.n_vertices
        touched = set()
        for a, b in chords:
            adjacent = [
                fi for fi, f in enumerate(faces)
                if a in f and b in f and fi not in touched
            ]
            if len(adjacent) != 2:
                continue  # shares a face with an already-split chord; next pass
            mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
            vertices.append(mid[None, :])
            m = next_id
            next_id += 1
            for fi in adjacent:
                f = faces[fi]
                ia = f.index(a)
                if f[(ia + 1) % 3] == b:  # directed edge a->b inside this face
                    x = f[(ia + 2) % 3]
                    faces[fi] = [a, m, x]
                    faces.append([m, b, x])
                else:  # directed edge b->a
                    x = f[(ia + 1) % 3]
                    faces[fi] = [m, a, x]
                    faces.append([b, m, x])
                touched.add(fi)
                touched.add(len(faces) - 1)
        mesh = TriangleMesh(np.concatenate(vertices), np.asarray(faces))


def mirror_and_stitch(half: TriangleMesh, plane: Plane | None = None):
    """Mirror a planar disk mesh across the plane and stitch the boundaries.

    Front vertices keep their indices; each interior vertex gets a mirrored
    twin, boundary vertices are shared and become the midline loop. The
    result is a closed, consistently oriented sphere-topology mesh.
    """
    if plane is None:
        plane = Plane.drawing_plane()
    if np.abs(plane.signed_distance(half.vertices)).max() > 1e-9:
        raise GeometryError("half mesh must lie in the symmetry plane")
    if half.euler_characteristic != 1 or len(half.boundary_loops) != 1:
        raise GeometryError("half mesh must be a topological disk")
    half = _split_boundary_chords(half)

    faces = half.faces.copy()
    if half.face_cross[:, 2].sum() < 0:  # orient front toward +z
        faces = faces[:, [0, 2, 1]]

    loop = half.boundary_loops[0]
    n = half.n_vertices
    is_boundary = np.zeros(n, dtype=bool)
    is_boundary[loop] = True
    interior = np.nonzero(~is_boundary)[0]

    twin = np.arange(n)
    twin[interior] = n + np.arange(len(interior))
    back_vertices = reflect_about_plane(half.vertices[interior], plane)
    vertices = np.concatenate([half.vertices, back_vertices])
    back_faces = twin[faces][:, [0, 2, 1]]
    all_faces = np.concatenate([faces, back_faces])
    mesh = TriangleMesh(vertices, all_faces)
    if mesh.euler_characteristic != 2 or not mesh.is_closed:
        raise GeometryError("stitched mesh is not a topological sphere")

    pairs = np.column_stack([interior, twin[interior]])
    constraints = ProjectionConstraints().replace_kind(
        CONSTRAINT_OUTLINE, loop, project_xy(half.vertices[loop])
    )
    return SymmetricPartMesh(
        mesh=mesh,
        plane=plane,
        pairs=pairs,
        midline=loop,
        midline_loop_sizes=(len(loop),),
        constraints=constraints,
    )


# ---------------------------------------------------------------------------
# Rotation inference
# ---------------------------------------------------------------------------

def outline_centroid(outline):
    c = Polygon(_close_ring(outline)).centroid
    return np.array([c.x, c.y, 0.0])


def infer_rotation_axis(landmark_pairs, outline, rotation_segment=None):
    """Infer the in-plane rotation axis from landmark pairs or a drag segment.

    The projected plane normal is the mean landmark-pair direction (or the
    segment direction); the axis is its in-plane perpendicular through the
    outline centroid.
    """
    if rotation_segment is not None:
        seg = np.asarray(rotation_segment, dtype=np.float64).reshape(2, 2)
        direction = seg[1] - seg[0]
        if np.linalg.norm(direction) < 1e-12:
            direction = None
    else:
        direction = None
    if direction is None:
        pairs = np.asarray(landmark_pairs, dtype=np.float64).reshape(-1, 2, 2)
        if len(pairs) == 0:
            raise AnnotationError(
                "need at least one landmark pair or a rotation segment"
            )
        dirs = pairs[:, 1] - pairs[:, 0]
        norms = np.linalg.norm(dirs, axis=1)
        if (norms < 1e-12).any():
            raise AnnotationError("degenerate landmark pair")
        dirs = dirs / norms[:, None]
        signs = np.where(dirs @ dirs[0] < 0, -1.0, 1.0)
        direction = (dirs * signs[:, None]).mean(axis=0)
        if np.linalg.norm(direction) < 1e-12:
            raise AnnotationError("landmark directions cancel out")
    direction = direction / np.linalg.norm(direction)
    axis_dir = np.array([-direction[1], direction[0], 0.0])
    return RotationSpec(
        axis_point=outline_centroid(outline), axis_direction=axis_dir, angle=0.0
    )


def outline_extent_along(outline, direction):
    pts = _close_ring(outline)
    proj = pts @ np.asarray(direction, dtype=np.float64).reshape(2)
    return float(proj.max() - proj.min())


def angle_from_segment(segment, reference_length, projected_normal):
    """Map a dragged segment to a rotation angle.

    angle = asin(len / reference) clamped to 80 degrees; the sign follows the
    segment direction against the projected plane normal.
    """
    if reference_length <= 0:
        raise GeometryError("reference length must be positive")
    seg = np.asarray(segment, dtype=np.float64).reshape(2, 2)
    vec = seg[1] - seg[0]
    length = np.linalg.norm(vec)
    if length < 1e-15:
        return 0.0
    ratio = min(length / reference_length, np.sin(MAX_ROTATION))
    angle = float(np.arcsin(ratio))
    pn = np.asarray(projected_normal, dtype=np.float64).reshape(2)
    if np.dot(vec, pn) < 0:
        angle = -angle
    return angle


def rotate_symmetry_plane(part: SymmetricPartMesh, spec: RotationSpec):
    """Rigidly rotate the part and its plane about the rotation axis."""
    if spec.angle == 0.0:
        return part
    rot, trans = rotation_about_axis(
        spec.axis_point, spec.axis_direction, spec.angle
    )
    vertices = part.mesh.vertices @ rot.T + trans
    normal = rot @ part.plane.normal
    point_on_plane = -part.plane.offset * part.plane.normal
    new_point = rot @ point_on_plane + trans
    plane = Plane.from_point_normal(new_point, normal)
    return part.replace(mesh=part.mesh.with_vertices(vertices), plane=plane)


# ---------------------------------------------------------------------------
# Outline-to-silhouette matching
# ---------------------------------------------------------------------------

def resample_polyline(points, n, closed=True):
    """Arc-length resampling of a polyline to n points."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if closed:
        pts = np.concatenate([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0:
        raise GeometryError("cannot resample a zero-length polyline")
    targets = (
        np.linspace(0, total, n, endpoint=False)
        if closed
        else np.linspace(0, total, n)
    )
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(seg) - 1)
    t = (targets - cum[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0)
    return pts[idx] + (pts[idx + 1] - pts[idx]) * t[:, None]


def silhouette_candidates(mesh: TriangleMesh, tol=1e-12):
    """Vertices on the occluding contour of the -z view.

    A vertex qualifies when its incident faces do not all face the same way
    along z (front- and back-facing faces meet in its one-ring).
    """
    nz = mesh.face_normals[:, 2]
    sign = np.where(nz > tol, 1, np.where(nz < -tol, -1, 0))
    vmin = np.full(mesh.n_vertices, 2, dtype=np.int8)
    vmax = np.full(mesh.n_vertices, -2, dtype=np.int8)
    for k in range(3):
        np.minimum.at(vmin, mesh.faces[:, k], sign)
        np.maximum.at(vmax, mesh.faces[:, k], sign)
    return np.nonzero((vmin <= 0) & (vmax >= 0) & (vmax >= vmin))[0]


def _monotone_assignment_cost(cost, starts):
    """Min-cost cyclically monotone injection of rows into columns.

    cost is (N, M) with columns in cyclic order. For each allowed start
    column s, row 0 is pinned to s and rows map to strictly increasing
    columns within the unrolled window [s, s+M). Returns (best_total,
    assignment array of column indices mod M).
    """
    n, m = cost.shape
    best_total = np.inf
    best_assign = None
    for s in starts:
        rolled = np.concatenate([cost[:, s:], cost[:, :s]], axis=1)
        f_prev = np.full(m, np.inf)
        f_prev[0] = rolled[0, 0]
        arg = np.zeros((n, m), dtype=np.int32)
        idx = np.arange(m)
        for i in range(1, n):
            run = np.minimum.accumulate(f_prev)
            # running argmin: latest index that set a new running minimum
            better = f_prev < np.concatenate([[np.inf], run[:-1]])
            run_arg = np.maximum.accumulate(np.where(better, idx, 0))
            f_cur = np.full(m, np.inf)
            f_cur[1:] = run[:-1] + rolled[i, 1:]
            arg[i, 1:] = run_arg[:-1]
            f_prev = f_cur
        q = int(np.argmin(f_prev))
        total = f_prev[q]
        if total < best_total:
            assign = np.zeros(n, dtype=np.int64)
            assign[-1] = q
            for i in range(n - 1, 0, -1):
                q = int(arg[i, q])
                assign[i - 1] = q
            best_total = float(total)
            best_assign = (assign + s) % m
    return best_total, best_assign


def match_outline(
    part: SymmetricPartMesh,
    outline,
    n_samples=200,
    start_candidates=16,
    prune_factor=3.0,
):
    """Assign outline samples to silhouette vertices, cyclically monotone.

    Viterbi over a cyclic chain: states are silhouette vertices in cyclic
    order, emissions are Gaussian in projected distance (so the optimum
    minimizes the summed squared distances), transitions forbid backtracking.
    The matched pairs replace the outline entries of the projection set;
    samples whose best assignment is a robust outlier (farther than
    prune_factor times the median match distance) are skipped rather than
    pinned to a wrong vertex.
    """
    outline = _close_ring(outline)
    cand = silhouette_candidates(part.mesh)
    if len(cand) < 3:
        raise GeometryError("silhouette candidate set is too small to match")
    n = min(n_samples, len(cand))
    samples = resample_polyline(outline, n, closed=True)

    proj = project_xy(part.mesh.vertices[cand])
    center = proj.mean(axis=0)
    order = np.argsort(np.arctan2(proj[:, 1] - center[1], proj[:, 0] - center[0]))
    cand = cand[order]
    proj = proj[order]

    diff = samples[:, None, :] - proj[None, :, :]
    cost = (diff ** 2).sum(axis=2)

    m = len(cand)
    if start_candidates <= 0 or m <= 128:
        starts = range(m)
    else:
        starts = np.argsort(cost[0])[:start_candidates]

    best = None
    for orientation in (1, -1):
        c = cost if orientation == 1 else cost[:, ::-1]
        total, assign = _monotone_assignment_cost(c, starts)
        if best is None or total < best[0]:
            if orientation == -1:
                assign = (m - 1) - assign
            best = (total, assign)

    assign = best[1]
    matched_ids = cand[assign]
    dists = np.linalg.norm(
        project_xy(part.mesh.vertices[matched_ids]) - samples, axis=1
    )
    if prune_factor > 0 and len(dists) > 4:
        keep = dists <= prune_factor * max(np.median(dists), 1e-12)
        matched_ids = matched_ids[keep]
        samples = samples[keep]
    samples = _reconcile_pair_targets(part, matched_ids, samples)
    constraints = part.constraints.replace_kind(
        CONSTRAINT_OUTLINE, matched_ids, samples
    )
    return part.replace(constraints=constraints), matched_ids, samples


def _reconcile_pair_targets(part, matched_ids, samples):
    """Make targets of doubly-pinned symmetric pairs mutually consistent.

    If v projects to a and its mirror partner projects to b, a symmetric
    shape allows b - a only along the projected plane normal; targets of
    pairs caught on both silhouette branches (near the cusps) are projected
    onto that feasible set, changing each by the least amount possible.
    """
    pn = project_xy(part.plane.normal.reshape(1, 3)).ravel()
    norm = np.linalg.norm(pn)
    if norm < 1e-12:
        return samples  # frontal plane: reflection preserves projections
    pn = pn / norm
    sigma = part.pair_map
    slot = {int(v): t for t, v in enumerate(matched_ids)}
    samples = samples.copy()
    for t, v in enumerate(matched_ids):
        w = int(sigma[v])
        if w == int(v) or w not in slot:
            continue
        s = slot[w]
        if s <= t:
            continue  # handle each pair once
        a, b = samples[t], samples[s]
        mid = 0.5 * (a + b)
        half_gap = np.dot(0.5 * (b - a), pn) * pn
        samples[t] = mid - half_gap
        samples[s] = mid + half_gap
    return samples
