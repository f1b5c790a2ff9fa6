import itertools

import numpy as np
import pytest

from charmesh.geometry import Plane, angle_between, reflect_about_plane
from charmesh.partbuild import (
    AnnotationError,
    AnnotationSet,
    RotationSpec,
    _monotone_assignment_cost,
    angle_from_segment,
    infer_rotation_axis,
    match_outline,
    min_interior_angles,
    mirror_and_stitch,
    outline_extent_along,
    resample_polyline,
    rotate_symmetry_plane,
    silhouette_candidates,
    triangulate_outline,
)

SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)


def circle_outline(n=64, r=0.5, center=(0.5, 0.5)):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return np.column_stack([center[0] + r * np.cos(t), center[1] + r * np.sin(t)])


class TestAnnotationSet:
    def test_reorients_cw_outline(self):
        ann = AnnotationSet(outline=SQUARE[::-1])
        from shapely.geometry import LinearRing

        assert LinearRing(ann.outline).is_ccw

    def test_rejects_self_intersection(self):
        bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
        with pytest.raises(AnnotationError):
            AnnotationSet(outline=bowtie)

    def test_rejects_landmark_outside(self):
        with pytest.raises(AnnotationError, match="inside"):
            AnnotationSet(outline=SQUARE, landmark_pairs=[[[2, 2], [0.5, 0.5]]])

    def test_rejects_nonpositive_thickness(self):
        with pytest.raises(AnnotationError):
            AnnotationSet(outline=SQUARE, thickness=0.0)


class TestTriangulateOutline:
    def test_square_density_and_boundary(self):
        mesh = triangulate_outline(SQUARE, target_count=1600)
        assert mesh.n_faces >= 1600
        (loop,) = mesh.boundary_loops
        pts = mesh.vertices[loop][:, :2]
        on_edge = (
            np.isclose(pts[:, 0], 0) | np.isclose(pts[:, 0], 1)
            | np.isclose(pts[:, 1], 0) | np.isclose(pts[:, 1], 1)
        )
        assert on_edge.all()
        for corner in SQUARE:
            assert np.isclose(pts, corner[None, :], atol=1e-12).all(1).any()

    def test_triangle_outline_minimal(self):
        tri = np.array([[0, 0], [1, 0], [0, 1]], dtype=float)
        mesh = triangulate_outline(tri, target_count=1)
        assert mesh.n_faces >= 1
        assert mesh.euler_characteristic == 1

    def test_disk_angle_quality(self):
        mesh = triangulate_outline(circle_outline(), target_count=1600)
        angles = min_interior_angles(mesh)
        assert np.rad2deg(angles.min()) >= 20.0

    def test_interior_area_uniformity(self):
        mesh = triangulate_outline(circle_outline(), target_count=1600)
        (loop,) = mesh.boundary_loops
        on_boundary = np.zeros(mesh.n_vertices, dtype=bool)
        on_boundary[loop] = True
        interior_faces = ~on_boundary[mesh.faces].any(axis=1)
        areas = mesh.face_areas[interior_faces]
        assert areas.max() / areas.min() <= 4.0

    def test_rejects_bowtie(self):
        bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
        with pytest.raises(AnnotationError):
            triangulate_outline(bowtie, target_count=16)

    def test_rejects_degenerate_outline(self):
        with pytest.raises(AnnotationError):
            triangulate_outline(np.array([[0, 0], [1, 0]]), target_count=4)


class TestMirrorAndStitch:
    def test_sphere_topology(self):
        half = triangulate_outline(SQUARE, target_count=64)
        part = mirror_and_stitch(half)
        assert part.mesh.euler_characteristic == 2
        assert part.mesh.is_closed

    def test_vertex_count(self):
        from charmesh.partbuild import _split_boundary_chords

        half = _split_boundary_chords(triangulate_outline(SQUARE, target_count=64))
        (loop,) = half.boundary_loops
        v_bd = len(loop)
        v_int = half.n_vertices - v_bd
        part = mirror_and_stitch(half)
        assert part.mesh.n_vertices == 2 * v_int + v_bd

    def test_pairs_reflect_exactly(self):
        half = triangulate_outline(circle_outline(16), target_count=32)
        part = mirror_and_stitch(half)
        v = part.mesh.vertices
        reflected = reflect_about_plane(v[part.pairs[:, 0]], part.plane)
        assert np.abs(reflected - v[part.pairs[:, 1]]).max() < 1e-15

    def test_watertight_every_edge_two_faces(self):
        half = triangulate_outline(circle_outline(16), target_count=32)
        part = mirror_and_stitch(half)
        assert len(part.mesh.boundary_edges) == 0

    def test_symmetric_connectivity(self):
        half = triangulate_outline(SQUARE, target_count=32)
        part = mirror_and_stitch(half)
        part.validate_symmetric_connectivity()

    def test_rejects_nonplanar_half(self):
        half = triangulate_outline(SQUARE, target_count=16)
        lifted = half.vertices.copy()
        lifted[:, 2] = 0.1
        from charmesh.geometry import GeometryError, TriangleMesh

        with pytest.raises(GeometryError):
            mirror_and_stitch(TriangleMesh(lifted, half.faces))


class TestRotationInference:
    def test_single_pair_axis(self):
        spec = infer_rotation_axis([[[0, 0], [1, 0]]], SQUARE)
        assert np.allclose(spec.axis_direction, [0, 1, 0])
        assert np.allclose(spec.axis_point, [0.5, 0.5, 0])

    def test_parallel_pairs_same_axis(self):
        spec = infer_rotation_axis(
            [[[0, 0], [1, 0]], [[0, 1], [1, 1]]], SQUARE
        )
        assert np.allclose(spec.axis_direction, [0, 1, 0])

    def test_mean_of_tilted_pairs(self):
        a = np.deg2rad(10)
        pairs = [
            [[0, 0], [np.cos(a), np.sin(a)]],
            [[0, 0], [np.cos(-a), np.sin(-a)]],
        ]
        spec = infer_rotation_axis(pairs, SQUARE)
        assert abs(spec.axis_direction[0]) < 1e-9
        assert abs(abs(spec.axis_direction[1]) - 1) < 1e-9

    def test_segment_overrides(self):
        spec = infer_rotation_axis([], SQUARE, rotation_segment=[[0, 0], [0, 2]])
        assert np.allclose(spec.axis_direction, [-1, 0, 0])
        assert np.allclose(spec.projected_plane_normal, [0, 1])

    def test_no_information_errors(self):
        with pytest.raises(AnnotationError):
            infer_rotation_axis([], SQUARE)


class TestAngleFromSegment:
    def test_zero_length(self):
        assert angle_from_segment([[0, 0], [0, 0]], 1.0, [1, 0]) == 0.0

    def test_sin_mapping(self):
        seg = [[0, 0], [np.sin(np.pi / 6), 0]]
        angle = angle_from_segment(seg, 1.0, [1, 0])
        assert angle == pytest.approx(0.5235987755982988, abs=1e-12)

    def test_clamp_at_eighty_degrees(self):
        angle = angle_from_segment([[0, 0], [5, 0]], 1.0, [1, 0])
        assert angle == pytest.approx(np.deg2rad(80))

    def test_sign_from_direction(self):
        angle = angle_from_segment([[0, 0], [-0.5, 0]], 1.0, [1, 0])
        assert angle < 0

    def test_extent_reference(self):
        assert outline_extent_along(SQUARE, [1, 0]) == pytest.approx(1.0)


class TestRotatePlane:
    def _flat_part(self):
        half = triangulate_outline(circle_outline(24), target_count=48)
        return mirror_and_stitch(half)

    def test_zero_angle_identity(self):
        part = self._flat_part()
        out = rotate_symmetry_plane(
            part, RotationSpec([0, 0, 0], [0, 1, 0], 0.0)
        )
        assert out is part

    def test_rotation_matrix_action(self):
        part = self._flat_part()
        theta = np.deg2rad(30)
        spec = RotationSpec([0, 0, 0], [0, 1, 0], theta)
        out = rotate_symmetry_plane(part, spec)
        expected = part.mesh.vertices @ np.array(
            [
                [np.cos(theta), 0, np.sin(theta)],
                [0, 1, 0],
                [-np.sin(theta), 0, np.cos(theta)],
            ]
        ).T
        assert np.allclose(out.mesh.vertices, expected, atol=1e-12)

    def test_plane_normal_angle(self):
        part = self._flat_part()
        theta = np.deg2rad(25)
        out = rotate_symmetry_plane(
            part, RotationSpec([0.3, 0.1, 0], [0, 1, 0], theta)
        )
        assert angle_between(out.plane.normal, [0, 0, 1]) == pytest.approx(theta)

    def test_pairs_still_reflect(self):
        part = self._flat_part()
        out = rotate_symmetry_plane(
            part, RotationSpec([0.5, 0.5, 0], [1, 0, 0], 0.4)
        )
        pair_err, mid_err = out.symmetry_residual()
        assert pair_err < 1e-12
        assert mid_err < 1e-12


def brute_force_monotone(cost):
    """Exhaustive search over all cyclically monotone injections."""
    n, m = cost.shape
    best = (np.inf, None)
    for s in range(m):
        for rest in itertools.combinations(range(1, m), n - 1):
            cols = [s] + [(s + r) % m for r in rest]
            total = sum(cost[i, c] for i, c in enumerate(cols))
            if total < best[0]:
                best = (total, cols)
    return best


class TestMonotoneAssignment:
    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            cost = rng.random((5, 9))
            expected_total, _ = brute_force_monotone(cost)
            total, assign = _monotone_assignment_cost(cost, range(9))
            assert total == pytest.approx(expected_total, abs=1e-12)
            assert len(set(assign.tolist())) == 5

    def test_naive_dp_agreement_32(self):
        # independent plain-python DP over every start offset
        rng = np.random.default_rng(3)
        cost = rng.random((32, 48))
        n, m = cost.shape
        best = np.inf
        for s in range(m):
            rolled = np.concatenate([cost[:, s:], cost[:, :s]], axis=1)
            f = [rolled[0][0]] + [np.inf] * (m - 1)
            for i in range(1, n):
                g = [np.inf] * m
                run = np.inf
                for q in range(1, m):
                    run = min(run, f[q - 1])
                    g[q] = run + rolled[i][q]
                f = g
            best = min(best, min(f))
        total, _ = _monotone_assignment_cost(cost, range(m))
        assert total == pytest.approx(best, abs=1e-10)


class TestMatchOutline:
    def _flat_circle_part(self, n_outline=32, target=128):
        half = triangulate_outline(circle_outline(n_outline), target_count=target)
        return mirror_and_stitch(half)

    def test_flat_part_matches_midline_in_order(self):
        part = self._flat_circle_part()
        matched_part, ids, samples = match_outline(
            part, circle_outline(32), n_samples=24
        )
        midline = set(part.midline.tolist())
        assert all(i in midline for i in ids.tolist())
        dists = np.linalg.norm(
            part.mesh.vertices[ids][:, :2] - samples, axis=1
        )
        spacing = 2 * np.pi * 0.5 / 24
        assert dists.max() <= spacing

    def test_assignment_cyclically_monotone(self):
        part = self._flat_circle_part()
        _, ids, _ = match_outline(part, circle_outline(32), n_samples=24)
        proj = part.mesh.vertices[ids][:, :2]
        center = proj.mean(axis=0)
        ang = np.arctan2(proj[:, 1] - center[1], proj[:, 0] - center[0])
        unwrapped = np.unwrap(ang)
        diffs = np.diff(unwrapped)
        # all steps advance the same way around the loop (one wrap allowed)
        assert (diffs > -1e-9).all() or (diffs < 1e-9).all()

    def test_orientation_invariance(self):
        part = self._flat_circle_part()
        outline = circle_outline(32)
        # reverse traversal but keep the same starting point so arc-length
        # resampling lands on the same point set
        reversed_outline = np.roll(outline[::-1], 1, axis=0)
        _, ids_fwd, s_fwd = match_outline(part, outline, n_samples=16)
        _, ids_rev, s_rev = match_outline(part, reversed_outline, n_samples=16)
        pairs_fwd = {
            (int(i), tuple(np.round(s, 9))) for i, s in zip(ids_fwd, s_fwd)
        }
        pairs_rev = {
            (int(i), tuple(np.round(s, 9))) for i, s in zip(ids_rev, s_rev)
        }
        assert pairs_fwd == pairs_rev

    def test_silhouette_of_flat_part_contains_midline(self):
        part = self._flat_circle_part()
        cand = set(silhouette_candidates(part.mesh).tolist())
        assert set(part.midline.tolist()) <= cand

    def test_resample_polyline_closed(self):
        square = resample_polyline(SQUARE, 8, closed=True)
        assert len(square) == 8
        assert np.allclose(square[0], [0, 0])
