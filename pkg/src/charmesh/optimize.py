"""Alternating least-squares shape optimization for symmetric parts.

Each alternation first smooths per-vertex target Laplacian magnitudes and
edge lengths over the surface, then solves one sparse linear least-squares
system for the vertex positions under five energies: target Laplacians,
target edge vectors, symmetric-pair consistency, midline-in-plane, and 2D
projection constraints. Mesh connectivity never changes, so the position
system's factorization is computed once per optimization and reused.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from shapely.geometry import Point, Polygon

from .geometry import (
    CONSTRAINT_LANDMARK,
    CONSTRAINT_MIDLINE,
    GeometryError,
    Plane,
    SymmetricPartMesh,
    project_xy,
    vertex_area_normal,
)

FLAT_SEED_FACTOR = 0.05  # curvature bias that kicks inflation off a flat start


@dataclass(frozen=True)
class EnergyWeights:
    """Energy coefficients; the Laplacian weight is derived per part."""

    edge: float = 1.0
    symmetry: float = 1000.0
    midline: float = 1000.0
    projection: float = 1000.0
    thickness: float | None = None  # overrides the part's own factor if set

    def laplacian_weight(self, part: SymmetricPartMesh):
        """k * (#edges / #projection constraints), recomputed as B changes."""
        k = self.thickness if self.thickness is not None else part.thickness
        n_constraints = max(len(part.constraints), 1)
        return k * len(part.mesh.edges) / n_constraints


@dataclass(frozen=True)
class TargetFields:
    """Smoothed per-vertex target Laplacian magnitudes and edge lengths."""

    laplacian_magnitudes: np.ndarray
    edge_lengths: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.laplacian_magnitudes, dtype=np.float64).reshape(-1)
        e = np.asarray(self.edge_lengths, dtype=np.float64).reshape(-1)
        if not (np.isfinite(c).all() and np.isfinite(e).all()):
            raise GeometryError("target fields must be finite")
        if (e <= 0).any():
            raise GeometryError("target edge lengths must be positive")
        object.__setattr__(self, "laplacian_magnitudes", c)
        object.__setattr__(self, "edge_lengths", e)


def smooth_scalar_field(laplacian, values):
    """Minimize ||L f||^2 + ||f - values||^2; SPD system (L^T L + I) f = values."""
    n = laplacian.shape[0]
    matrix = (laplacian.T @ laplacian + sp.identity(n)).tocsc()
    return spla.spsolve(matrix, np.asarray(values, dtype=np.float64))


def current_field_estimates(part, positions, bias=0.0):
    """Current Laplacian magnitudes and mean incident edge length per vertex.

    The magnitude estimate is unsigned (delta_i = A_i c_i n_i keeps pointing
    along the vertex normal), which is what keeps the inflation from
    collapsing back to the flat state. Areas enter as relative weights
    (mean 1) so the target Laplacian keeps the measured magnitude scale.
    """
    mesh = part.mesh.with_vertices(positions)
    areas, normals = vertex_area_normal(mesh, fallback_normal=part.plane.normal)
    # relative density weights, clipped: runaway area ratios on distorted
    # meshes would otherwise amplify the Laplacian targets
    areas = np.clip(areas / areas.mean(), 0.25, 4.0)
    lap = mesh.laplacian @ positions
    c = np.linalg.norm(lap, axis=1)
    if bias:
        interior = np.ones(mesh.n_vertices, dtype=bool)
        interior[part.midline] = False
        c = c + bias * interior
    edges = mesh.edges
    lengths = np.linalg.norm(positions[edges[:, 0]] - positions[edges[:, 1]], axis=1)
    e = np.zeros(mesh.n_vertices)
    deg = np.zeros(mesh.n_vertices)
    np.add.at(e, edges[:, 0], lengths)
    np.add.at(e, edges[:, 1], lengths)
    np.add.at(deg, edges[:, 0], 1)
    np.add.at(deg, edges[:, 1], 1)
    return c, e / deg, areas, normals


def energy_terms(part, positions, delta, eta, weights: EnergyWeights):
    """All five energy values plus their weighted total at given positions."""
    mesh = part.mesh
    lap = mesh.laplacian @ positions
    e_c = float(((lap - delta) ** 2).sum())
    edges = mesh.edges
    dv = positions[edges[:, 0]] - positions[edges[:, 1]]
    e_e = float(((dv - eta) ** 2).sum())
    n = part.plane.normal
    d = part.plane.offset
    if len(part.pairs):
        vi = positions[part.pairs[:, 0]]
        vj = positions[part.pairs[:, 1]]
        mids = ((vi + vj) / 2) @ n + d
        cross = np.cross(np.broadcast_to(n, vi.shape), vi - vj)
        e_s = float((mids ** 2).sum() + (cross ** 2).sum())
    else:
        e_s = 0.0
    e_m = float(((positions[part.midline] @ n + d) ** 2).sum())
    cons = part.constraints
    if len(cons):
        res = project_xy(positions[cons.ids]) - cons.targets
        e_p = float((res ** 2).sum())
    else:
        e_p = 0.0
    alpha_c = weights.laplacian_weight(part)
    total = (
        alpha_c * e_c
        + weights.edge * e_e
        + weights.symmetry * e_s
        + weights.midline * e_m
        + weights.projection * e_p
    )
    return {
        "laplacian": e_c,
        "edge": e_e,
        "symmetry": e_s,
        "midline": e_m,
        "projection": e_p,
        "total": total,
    }


class PartOptimizer:
    """Owns the sparse factorizations for one part's optimization session.

    Connectivity, symmetry plane, constraint membership and weights are fixed
    for the session, so both the scalar-field system and the position system
    are factorized once and reused across alternations (only right-hand
    sides change).
    """

    def __init__(self, part: SymmetricPartMesh, weights: EnergyWeights | None = None):
        self.part = part
        self.weights = weights or EnergyWeights()
        mesh = part.mesh
        self.lap = mesh.laplacian
        n = mesh.n_vertices
        scalar_matrix = (self.lap.T @ self.lap + sp.identity(n)).tocsc()
        self._scalar_solve = spla.factorized(scalar_matrix)
        self._position_factor = None
        self._matrix = None
        self.energy_history = []
        # stability rails: target fields are clamped to the initial mesh scale,
        # which stops the magnitude/normal feedback loop from running away on
        # folded configurations
        lap_mag = np.linalg.norm(self.lap @ mesh.vertices, axis=1)
        base = float(np.percentile(lap_mag, 99)) if len(lap_mag) else 1.0
        mean_edge = mesh.mean_edge_length()
        self._c_cap = max(5.0 * base, 1e-3 * mean_edge)
        self._e_bounds = (0.2 * mean_edge, 5.0 * mean_edge)

    # -- scalar fields ------------------------------------------------------
    def solve_scalar_fields(self, positions, bias=0.0):
        """Smooth the current Laplacian-magnitude and edge-length estimates.

        Minimizes ||L f||^2 + ||f - f'||^2 for each field; the system matrix
        (L^T L + I) is symmetric positive definite.
        """
        c_prime, e_prime, areas, normals = current_field_estimates(
            self.part, positions, bias=bias
        )
        c = np.clip(self._scalar_solve(c_prime), 0.0, self._c_cap)
        e = np.clip(self._scalar_solve(e_prime), *self._e_bounds)
        return TargetFields(c, e), areas, normals

    # -- position system ----------------------------------------------------
    def _build_position_system(self):
        part = self.part
        mesh = part.mesh
        n = mesh.n_vertices
        w = self.weights
        wc = np.sqrt(w.laplacian_weight(part))
        we = np.sqrt(w.edge)
        ws = np.sqrt(w.symmetry)
        wm = np.sqrt(w.midline)
        wp = np.sqrt(w.projection)
        nrm = part.plane.normal
        d = part.plane.offset
        blocks = []

        lap3 = sp.block_diag([self.lap, self.lap, self.lap], format="csr")
        blocks.append(lap3 * wc)

        edges = mesh.edges
        m = len(edges)
        rows = np.repeat(np.arange(m), 2)
        cols = edges.ravel()
        vals = np.tile([1.0, -1.0], m)
        inc = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
        blocks.append(sp.block_diag([inc, inc, inc], format="csr") * we)

        pairs = part.pairs
        p = len(pairs)
        if p:
            i, j = pairs[:, 0], pairs[:, 1]
            r = np.arange(p)
            mid_rows = sp.csr_matrix(
                (
                    np.concatenate([np.full(p, 0.5 * nrm[k]) for k in range(3)] * 2),
                    (
                        np.tile(np.concatenate([r, r, r]), 2),
                        np.concatenate(
                            [i, i + n, i + 2 * n, j, j + n, j + 2 * n]
                        ),
                    ),
                ),
                shape=(p, 3 * n),
            )
            blocks.append(mid_rows * ws)
            # components of n x (v_i - v_j); each row is linear in 4 coords
            cross_entries = [
                ((1, -nrm[2]), (2, nrm[1])),   # ny*dz - nz*dy
                ((2, -nrm[0]), (0, nrm[2])),   # nz*dx - nx*dz
                ((0, -nrm[1]), (1, nrm[0])),   # nx*dy - ny*dx
            ]
            for (ca, va), (cb, vb) in cross_entries:
                rows_c = np.tile(r, 4)
                cols_c = np.concatenate(
                    [i + ca * n, j + ca * n, i + cb * n, j + cb * n]
                )
                vals_c = np.concatenate(
                    [np.full(p, va), np.full(p, -va), np.full(p, vb), np.full(p, -vb)]
                )
                blocks.append(
                    sp.csr_matrix((vals_c, (rows_c, cols_c)), shape=(p, 3 * n)) * ws
                )

        mid = part.midline
        if len(mid):
            r = np.arange(len(mid))
            rows_m = np.concatenate([r, r, r])
            cols_m = np.concatenate([mid, mid + n, mid + 2 * n])
            vals_m = np.concatenate(
                [np.full(len(mid), nrm[k]) for k in range(3)]
            )
            blocks.append(
                sp.csr_matrix((vals_m, (rows_m, cols_m)), shape=(len(mid), 3 * n)) * wm
            )

        cons = part.constraints
        if len(cons) == 0:
            raise GeometryError(
                "no projection constraints: the position system has a null space"
            )
        b_ids = cons.ids
        r = np.arange(len(b_ids))
        proj_rows = sp.csr_matrix(
            (
                np.ones(2 * len(b_ids)),
                (
                    np.concatenate([2 * r, 2 * r + 1]),
                    np.concatenate([b_ids, b_ids + n]),
                ),
            ),
            shape=(2 * len(b_ids), 3 * n),
        )
        blocks.append(proj_rows * wp)

        matrix = sp.vstack(blocks).tocsr()
        normal = (matrix.T @ matrix).tocsc()
        try:
            factor = spla.splu(normal)
        except RuntimeError as exc:
            raise GeometryError(f"position system is singular: {exc}") from exc

        # right-hand-side layout for per-iteration reuse
        sizes = [3 * n, 3 * m]
        if p:
            sizes += [p, p, p, p]
        if len(mid):
            sizes += [len(mid)]
        sizes += [2 * len(b_ids)]
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        b = np.zeros(offsets[-1])
        cursor = 2
        if p:
            b[offsets[2]:offsets[3]] = -d * ws
            cursor = 6
        if len(mid):
            b[offsets[cursor]:offsets[cursor + 1]] = -d * wm
            cursor += 1
        b[offsets[cursor]:offsets[cursor] + 2 * len(b_ids):2] = (
            cons.targets[:, 0] * wp
        )
        b[offsets[cursor] + 1:offsets[cursor] + 2 * len(b_ids):2] = (
            cons.targets[:, 1] * wp
        )
        self._matrix = matrix
        self._b_template = b
        self._b_offsets = offsets
        self._weights_sqrt = (wc, we)
        self._position_factor = factor

    def solve_positions(self, delta, eta):
        """Positions minimizing the weighted five-term energy."""
        if self._position_factor is None:
            self._build_position_system()
        n = self.part.mesh.n_vertices
        m = len(self.part.mesh.edges)
        wc, we = self._weights_sqrt
        b = self._b_template.copy()
        b[: 3 * n] = delta.flatten(order="F") * wc
        b[3 * n : 3 * n + 3 * m] = eta.flatten(order="F") * we
        rhs = self._matrix.T @ b
        x = self._position_factor.solve(rhs)
        if not np.isfinite(x).all():
            raise GeometryError("position solve produced non-finite values")
        self._last_system = (self._matrix, b, x)
        return x.reshape(3, n).T

    def normal_equation_residual(self):
        """Relative residual ||A^T(Ax - b)|| / ||A^T b|| of the last solve."""
        matrix, b, x = self._last_system
        num = np.linalg.norm(matrix.T @ (matrix @ x - b))
        den = np.linalg.norm(matrix.T @ b)
        return num / max(den, 1e-300)

    def _symmetric_subspace(self):
        """Linear map x = S q + c onto the exactly-symmetric configurations.

        Front-half vertices keep 3 dofs, back-half positions are the
        reflections of their partners, midline vertices get 2 in-plane dofs.
        """
        part = self.part
        n = part.mesh.n_vertices
        nrm = part.plane.normal
        d = part.plane.offset
        refl = np.eye(3) - 2.0 * np.outer(nrm, nrm)
        shift = -2.0 * d * nrm
        # in-plane orthonormal basis
        seed = np.array([1.0, 0.0, 0.0])
        if abs(nrm[0]) > 0.9:
            seed = np.array([0.0, 1.0, 0.0])
        b1 = seed - np.dot(seed, nrm) * nrm
        b1 /= np.linalg.norm(b1)
        b2 = np.cross(nrm, b1)
        pairs = part.pairs
        mid = part.midline
        p_cnt, m_cnt = len(pairs), len(mid)
        q_dim = 3 * p_cnt + 2 * m_cnt
        rows, cols, vals = [], [], []
        c0 = np.zeros(3 * n)
        for axis in range(3):
            # free front vertices: identity
            rows.append(pairs[:, 0] + axis * n)
            cols.append(np.arange(p_cnt) + axis * p_cnt)
            vals.append(np.ones(p_cnt))
            # reflected back vertices
            for axis2 in range(3):
                rows.append(pairs[:, 1] + axis * n)
                cols.append(np.arange(p_cnt) + axis2 * p_cnt)
                vals.append(np.full(p_cnt, refl[axis, axis2]))
            c0[pairs[:, 1] + axis * n] = shift[axis]
            # midline vertices: plane point + 2-dof basis
            if m_cnt:
                for kb, bb in enumerate((b1, b2)):
                    rows.append(mid + axis * n)
                    cols.append(np.arange(m_cnt) + 3 * p_cnt + kb * m_cnt)
                    vals.append(np.full(m_cnt, bb[axis]))
                c0[mid + axis * n] = -d * nrm[axis]
        sub = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(3 * n, q_dim),
        )
        return sub, c0

    def solve_positions_symmetric(self, delta, eta):
        """Minimize the energy over exactly-symmetric configurations."""
        if self._position_factor is None:
            self._build_position_system()
        n = self.part.mesh.n_vertices
        m = len(self.part.mesh.edges)
        wc, we = self._weights_sqrt
        b = self._b_template.copy()
        b[: 3 * n] = delta.flatten(order="F") * wc
        b[3 * n : 3 * n + 3 * m] = eta.flatten(order="F") * we
        if not hasattr(self, "_sym_factor"):
            sub, c0 = self._symmetric_subspace()
            reduced = (self._matrix @ sub).tocsc()
            self._sym_map = (sub, c0, reduced)
            try:
                self._sym_factor = spla.splu((reduced.T @ reduced).tocsc())
            except RuntimeError as exc:
                raise GeometryError(
                    f"symmetric position system is singular: {exc}"
                ) from exc
        sub, c0, reduced = self._sym_map
        rhs = reduced.T @ (b - self._matrix @ c0)
        q = self._sym_factor.solve(rhs)
        x = sub @ q + c0
        if not np.isfinite(x).all():
            raise GeometryError("symmetric solve produced non-finite values")
        return x.reshape(3, n).T

    # -- alternation --------------------------------------------------------
    def _edge_targets(self, positions, fields):
        edges = self.part.mesh.edges
        dv = positions[edges[:, 0]] - positions[edges[:, 1]]
        norms = np.linalg.norm(dv, axis=1)
        unit = dv / np.where(norms > 1e-15, norms, 1.0)[:, None]
        mean_e = 0.5 * (
            fields.edge_lengths[edges[:, 0]] + fields.edge_lengths[edges[:, 1]]
        )
        return mean_e[:, None] * unit

    def run(self, iterations=5, max_inner=40, inner_tolerance=1e-7,
            symmetrize=True):
        """Alternate the scalar and position solves `iterations` times.

        The edge term is nonlinear in the positions (a target length along
        the current edge direction), so each alternation iterates the
        position solve to the direction fixed point; every inner solve is a
        majorize-minimize step, so the energy never increases. The final
        positions come from re-solving the same system restricted to the
        exactly-symmetric subspace, so pairs mirror and the midline sits in
        the plane to machine precision without sacrificing the projections.
        """
        part = self.part
        positions = np.asarray(part.mesh.vertices, dtype=np.float64).copy()
        needs_seed = np.abs(part.plane.signed_distance(positions)).max() < 1e-9
        scale = float(
            np.linalg.norm(positions.max(axis=0) - positions.min(axis=0))
        ) or 1.0
        fields = None
        best = None  # (energy, positions, fields) divergence fallback
        for it in range(iterations):
            bias = 0.0
            if needs_seed and it == 0:
                bias = FLAT_SEED_FACTOR * part.mesh.with_vertices(
                    positions
                ).mean_edge_length()
            fields, areas, normals = self.solve_scalar_fields(positions, bias=bias)
            delta = (
                areas[:, None] * fields.laplacian_magnitudes[:, None] * normals
            )
            after = None
            for _ in range(max_inner):
                eta = self._edge_targets(positions, fields)
                before = energy_terms(part, positions, delta, eta, self.weights)
                new_positions = self.solve_positions(delta, eta)
                after = energy_terms(part, new_positions, delta, eta, self.weights)
                if after["total"] > before["total"] * (1 + 1e-9) + 1e-12:
                    raise GeometryError(
                        "position solve increased the energy; system is inconsistent"
                    )
                move = np.abs(new_positions - positions).max()
                positions = new_positions
                if move < inner_tolerance * scale:
                    break
            self.energy_history.append(after["total"])
            if best is None or after["total"] <= best[0]:
                best = (after["total"], positions.copy(), fields)
            elif after["total"] > 1.02 * best[0] and it > 0:
                # the magnitude/normal feedback is pumping energy: stop at
                # the best state instead of letting it run away
                positions, fields = best[1], best[2]
                break
        if symmetrize:
            fields, areas, normals = self.solve_scalar_fields(positions)
            delta = (
                areas[:, None] * fields.laplacian_magnitudes[:, None] * normals
            )
            eta = self._edge_targets(positions, fields)
            positions = self.solve_positions_symmetric(delta, eta)
        return part.replace(
            mesh=part.mesh.with_vertices(positions),
            target_laplacians=fields.laplacian_magnitudes,
            target_edge_lengths=fields.edge_lengths,
        )


def symmetrize_positions(part: SymmetricPartMesh, positions):
    """Project positions onto the exactly symmetric configuration.

    Each pair is replaced by the average of itself and its partner's
    reflection; midline vertices are projected onto the plane. Moves no
    vertex farther than its current symmetry error.
    """
    from .geometry import reflect_about_plane

    out = np.asarray(positions, dtype=np.float64).copy()
    pairs = part.pairs
    if len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        mean_i = 0.5 * (out[i] + reflect_about_plane(out[j], part.plane))
        out[i] = mean_i
        out[j] = reflect_about_plane(mean_i, part.plane)
    mid = part.midline
    if len(mid):
        dist = part.plane.signed_distance(out[mid])
        out[mid] = out[mid] - dist[:, None] * part.plane.normal
    return out


def solve_scalar_fields(part: SymmetricPartMesh, bias=0.0):
    """One-off scalar-field smoothing for the part's current positions."""
    opt = PartOptimizer(part)
    fields, _, _ = opt.solve_scalar_fields(part.mesh.vertices, bias=bias)
    return fields


def optimize_part(
    part: SymmetricPartMesh,
    weights: EnergyWeights | None = None,
    iterations=5,
    optimizer: PartOptimizer | None = None,
):
    """Alternate scalar-field and position solves for a fixed plane and B."""
    opt = optimizer or PartOptimizer(part, weights)
    return opt.run(iterations)


def refine_part(
    part: SymmetricPartMesh,
    outline,
    weights: EnergyWeights | None = None,
    rounds=2,
    iterations=5,
    n_samples=200,
    strain_limit=6e-4,
):
    """Alternate outline matching and optimization to a consistent shape.

    The first round matches the flat or freshly rotated mesh (silhouette =
    midline), later rounds re-match the true occluding contour. Pins that
    the converged shape cannot satisfy within `strain_limit` of the bounding
    box diagonal are skipped and the positions re-solved, mirroring the
    matcher's own treatment of unmatchable outline samples.
    """
    from .partbuild import match_outline

    for _ in range(max(rounds, 1)):
        part, _, _ = match_outline(part, outline, n_samples=n_samples)
        part = PartOptimizer(part, weights).run(iterations)
    for _ in range(3):
        v = part.mesh.vertices
        cons = part.constraints
        if not len(cons):
            break
        bbox = float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))
        residuals = np.linalg.norm(project_xy(v[cons.ids]) - cons.targets, axis=1)
        strained = residuals > strain_limit * bbox
        if not strained.any() or (~strained).sum() < 4:
            break
        keep = ~strained
        part = part.replace(
            constraints=type(cons)(
                ids=cons.ids[keep],
                targets=cons.targets[keep],
                kinds=tuple(np.array(cons.kinds)[keep]),
            )
        )
        # shape is already converged; a short re-solve absorbs the pruning
        part = PartOptimizer(part, weights).run(min(iterations, 2))
    return part


# ---------------------------------------------------------------------------
# Landmark pairs
# ---------------------------------------------------------------------------

def solve_landmark_pair(p1, p2, plane: Plane):
    """Lift a 2D landmark pair to 3D, exactly symmetric about the plane.

    The pair symmetry is enforced exactly (the partner is the reflection of
    the first point), while the projections onto the annotated 2D points are
    satisfied in the least-squares sense; by the reflection isometry any
    annotation inconsistency splits evenly between the two points. Edge-on
    planes leave the depth free and take the minimum-norm (drawing-plane)
    answer.
    """
    p1 = np.asarray(p1, dtype=np.float64).reshape(2)
    p2 = np.asarray(p2, dtype=np.float64).reshape(2)
    n = plane.normal
    if np.hypot(n[0], n[1]) < 1e-9:
        raise GeometryError(
            "landmarks need an oblique symmetry plane: depth is unobservable "
            "when the plane is parallel to the drawing"
        )
    refl = np.eye(3) - 2.0 * np.outer(n, n)
    shift = -2.0 * plane.offset * n
    rows = np.zeros((4, 3))
    rhs = np.zeros(4)
    rows[0, 0] = 1.0
    rhs[0] = p1[0]
    rows[1, 1] = 1.0
    rhs[1] = p1[1]
    rows[2] = refl[0]
    rhs[2] = p2[0] - shift[0]
    rows[3] = refl[1]
    rhs[3] = p2[1] - shift[1]
    v1, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    v2 = refl @ v1 + shift
    return v1, v2


def pin_landmark_pair(part: SymmetricPartMesh, p1, p2):
    """Snap the nearest symmetric vertex pair to a solved landmark pair.

    The snapped pair is chosen by smallest combined projected distance (ties
    by lowest vertex index) and its 2D targets join the projection set.
    """
    v1, v2 = solve_landmark_pair(p1, p2, part.plane)
    pairs = part.pairs
    if not len(pairs):
        raise GeometryError("part has no symmetric pairs to pin")
    proj = project_xy(part.mesh.vertices)
    t1, t2 = project_xy(v1), project_xy(v2)
    d_direct = (
        np.linalg.norm(proj[pairs[:, 0]] - t1, axis=1)
        + np.linalg.norm(proj[pairs[:, 1]] - t2, axis=1)
    )
    d_swapped = (
        np.linalg.norm(proj[pairs[:, 0]] - t2, axis=1)
        + np.linalg.norm(proj[pairs[:, 1]] - t1, axis=1)
    )
    costs = np.minimum(d_direct, d_swapped)
    min_ids = pairs.min(axis=1)
    best = np.lexsort((min_ids, costs))[0]
    i, j = pairs[best]
    if d_swapped[best] < d_direct[best]:
        targets = np.array([t2.ravel(), t1.ravel()])
    else:
        targets = np.array([t1.ravel(), t2.ravel()])
    constraints = part.constraints.append(
        CONSTRAINT_LANDMARK, np.array([i, j]), targets
    )
    return part.replace(constraints=constraints), (int(i), int(j))


# ---------------------------------------------------------------------------
# Midline editing
# ---------------------------------------------------------------------------

def apply_midline(part: SymmetricPartMesh, midline, outline=None):
    """Pin visible midline vertices to targets sampled from the drawn curve.

    Targets are matched by arc length along the visible midline arc; points
    falling outside the outline region are clamped to it with a warning.
    """
    if midline is None or len(np.atleast_2d(midline)) == 0:
        return part
    midline = np.asarray(midline, dtype=np.float64).reshape(-1, 2)
    loop = part.midline_loops()[0]
    positions = part.mesh.vertices
    _, normals = vertex_area_normal(part.mesh, fallback_normal=part.plane.normal)
    visible = normals[loop][:, 2] > 0

    chain = _visible_chain(loop, visible, positions, midline)
    if len(chain) < 2:
        warnings.warn("no visible midline vertices; midline ignored")
        return part
    proj = project_xy(positions[chain])
    # correspond by the chain's own arc-length fractions so that a curve
    # equal to the current projection re-pins every vertex onto itself
    seg = np.linalg.norm(np.diff(proj, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    fracs = cum / max(cum[-1], 1e-300)
    targets = _sample_polyline_at(midline, fracs)
    if ((proj - targets) ** 2).sum() > ((proj - targets[::-1]) ** 2).sum():
        targets = targets[::-1]

    if outline is not None:
        poly = Polygon(np.asarray(outline, dtype=np.float64).reshape(-1, 2))
        clamped = 0
        for t in range(len(targets)):
            pt = Point(targets[t])
            if not poly.covers(pt):
                nearest = poly.exterior.interpolate(poly.exterior.project(pt))
                targets[t] = [nearest.x, nearest.y]
                clamped += 1
        if clamped:
            warnings.warn(
                f"{clamped} midline target(s) fell outside the outline and were clamped"
            )
    constraints = part.constraints.replace_kind(CONSTRAINT_MIDLINE, chain, targets)
    # a vertex re-pinned by the midline must not keep a stale outline pin
    chain_set = set(chain.tolist())
    stale = [
        t
        for t, (vid, kind) in enumerate(zip(constraints.ids, constraints.kinds))
        if kind != CONSTRAINT_MIDLINE and int(vid) in chain_set
    ]
    if stale:
        keep = np.ones(len(constraints), dtype=bool)
        keep[stale] = False
        constraints = type(constraints)(
            ids=constraints.ids[keep],
            targets=constraints.targets[keep],
            kinds=tuple(np.array(constraints.kinds)[keep]),
        )
    return part.replace(constraints=constraints)


def _sample_polyline_at(points, fractions):
    """Sample an open polyline at given arc-length fractions in [0, 1]."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 1:
        return np.repeat(pts, len(fractions), axis=0)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = max(cum[-1], 1e-300)
    targets = np.clip(np.asarray(fractions), 0.0, 1.0) * total
    idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, len(seg) - 1)
    t = (targets - cum[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0)
    return pts[idx] + (pts[idx + 1] - pts[idx]) * t[:, None]


def _visible_chain(loop, visible, positions, midline):
    """Longest contiguous visible arc; whole-loop case keyed to curve ends."""
    from .partbuild import resample_polyline

    if visible.all():
        proj = project_xy(positions[loop])
        a = int(np.argmin(np.linalg.norm(proj - midline[0], axis=1)))
        b = int(np.argmin(np.linalg.norm(proj - midline[-1], axis=1)))
        if a == b:
            return loop[:0]
        best = None
        for arc in (_arc_indices(len(loop), a, b),
                    _arc_indices(len(loop), b, a)[::-1]):
            t = resample_polyline(midline, len(arc), closed=False)
            cost = ((proj[arc] - t) ** 2).sum()
            if best is None or cost < best[0]:
                best = (cost, arc)
        return loop[best[1]]
    if not visible.any():
        return loop[:0]
    # longest cyclic run of visible flags
    k = len(loop)
    doubled = np.concatenate([visible, visible])
    runs = []
    start = None
    for idx in range(2 * k):
        if doubled[idx] and start is None:
            start = idx
        elif not doubled[idx] and start is not None:
            runs.append((start, idx - start))
            start = None
    if start is not None:
        runs.append((start, 2 * k - start))
    best_start, best_len = max(
        ((s, min(length, k)) for s, length in runs if s < k),
        key=lambda t: t[1],
    )
    sel = [(best_start + t) % k for t in range(best_len)]
    return loop[sel]


def _arc_indices(k, a, b):
    out = [a]
    cur = a
    while cur != b:
        cur = (cur + 1) % k
        out.append(cur)
    return np.array(out, dtype=np.int64)
