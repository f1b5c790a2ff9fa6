import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charmesh.geometry import (
    GeometryError,
    Plane,
    TriangleMesh,
    angle_between,
    graph_laplacian,
    normal_deviation,
    reflect_about_plane,
    rotation_about_axis,
    uniform_laplacian,
    vertex_area_normal,
)


def square_mesh():
    # unit square split along the diagonal (0,0)-(1,1)
    v = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
    f = np.array([[0, 1, 2], [0, 2, 3]])
    return TriangleMesh(v, f)


def icosahedron():
    phi = (1 + np.sqrt(5)) / 2
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return TriangleMesh(v, f)


class TestPlane:
    def test_normalizes(self):
        p = Plane(normal=[0, 0, 2], offset=4)
        assert np.allclose(p.normal, [0, 0, 1])
        assert p.offset == pytest.approx(2.0)
        assert abs(np.linalg.norm(p.normal) - 1) < 1e-9

    def test_rejects_zero_normal(self):
        with pytest.raises(GeometryError):
            Plane(normal=[0, 0, 0], offset=1)

    def test_from_point_normal(self):
        p = Plane.from_point_normal([0.5, 0, 0], [1, 0, 0])
        assert p.signed_distance([0.5, 3, -2]) == pytest.approx(0.0)


class TestReflect:
    def test_z0(self):
        p = Plane.drawing_plane()
        assert np.allclose(reflect_about_plane([1, 2, 3], p), [[1, 2, -3]])

    def test_fixed_point_on_plane(self):
        p = Plane(normal=[1, 1, 0], offset=-1)  # normalizes to (x+y)/sqrt2 = 1/sqrt2
        pt = np.array([0.5, 0.5, 5.0])
        assert np.allclose(reflect_about_plane(pt, p), [pt], atol=1e-12)

    def test_offset_plane(self):
        # plane x = 0.5 -> n=(1,0,0), d=-0.5; (1,0,0) maps to (0,0,0)
        p = Plane(normal=[1, 0, 0], offset=-0.5)
        assert np.allclose(reflect_about_plane([1, 0, 0], p), [[0, 0, 0]])

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(-10, 10), min_size=3, max_size=3),
        st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(
            lambda n: np.linalg.norm(n) > 1e-3
        ),
        st.floats(-5, 5),
    )
    def test_involution(self, pt, normal, d):
        plane = Plane(normal=normal, offset=d)
        once = reflect_about_plane(pt, plane)
        twice = reflect_about_plane(once, plane)
        assert np.abs(twice - np.asarray(pt)).max() < 1e-12


class TestLaplacian:
    def test_constant_in_kernel(self):
        mesh = icosahedron()
        out = graph_laplacian(mesh, np.full(mesh.n_vertices, 3.7))
        assert np.abs(out).max() < 1e-12

    def test_path_graph_stencil(self):
        # 4-vertex path, values [0,1,2,3]: interior vertex 1 -> 1 - (0+2)/2 = 0
        lap = uniform_laplacian(4, [(0, 1), (1, 2), (2, 3)])
        out = lap @ np.array([0.0, 1.0, 2.0, 3.0])
        assert out[1] == pytest.approx(0.0)
        assert out[2] == pytest.approx(0.0)
        assert out[0] == pytest.approx(-1.0)

    def test_centroid_neighbor_case(self):
        # vertex whose neighbors average to its own position has zero Laplacian
        mesh = square_mesh()
        out = graph_laplacian(mesh, mesh.vertices)
        centered = 0.25 * (mesh.vertices[1] + mesh.vertices[3]) + 0.5 * 0  # noqa: F841
        # vertex 0 neighbors: 1,2,3 -> mean (2/3, 2/3, 0); L = -(2/3, 2/3, 0)
        assert np.allclose(out[0], [-2 / 3, -2 / 3, 0])

    def test_isolated_vertex_errors(self):
        with pytest.raises(GeometryError, match="isolated"):
            uniform_laplacian(3, [(0, 1)])

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, a, b):
        mesh = icosahedron()
        rng = np.random.default_rng(0)
        x = rng.normal(size=mesh.n_vertices)
        y = rng.normal(size=mesh.n_vertices)
        lhs = graph_laplacian(mesh, a * x + b * y)
        rhs = a * graph_laplacian(mesh, x) + b * graph_laplacian(mesh, y)
        assert np.abs(lhs - rhs).max() < 1e-12


class TestVertexAreaNormal:
    def test_corner_of_one_triangle(self):
        mesh = square_mesh()
        areas, normals = vertex_area_normal(mesh)
        # vertex 1 touches only face (0,1,2) of area 0.5
        assert areas[1] == pytest.approx(0.5 / 3)
        assert np.allclose(normals, [[0, 0, 1]] * 4)

    def test_planar_normals(self):
        mesh = square_mesh()
        _, normals = vertex_area_normal(mesh)
        assert np.allclose(normals, np.tile([0, 0, 1.0], (4, 1)))

    def test_areas_sum_to_total(self):
        mesh = icosahedron()
        areas, _ = vertex_area_normal(mesh)
        assert areas.sum() == pytest.approx(mesh.total_area, rel=1e-9)


class TestMeshValidation:
    def test_rejects_degenerate_face(self):
        v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
        with pytest.raises(GeometryError, match="degenerate"):
            TriangleMesh(v, [[0, 1, 2]])

    def test_rejects_bad_index(self):
        v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
        with pytest.raises(GeometryError, match="out of range"):
            TriangleMesh(v, [[0, 1, 5]])

    def test_rejects_inconsistent_orientation(self):
        v = np.array(
            [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float
        )
        with pytest.raises(GeometryError):
            TriangleMesh(v, [[0, 1, 2], [0, 2, 3], [0, 3, 2]])

    def test_euler_characteristic(self):
        assert icosahedron().euler_characteristic == 2
        assert square_mesh().euler_characteristic == 1

    def test_boundary_loop(self):
        mesh = square_mesh()
        (loop,) = mesh.boundary_loops
        assert sorted(loop.tolist()) == [0, 1, 2, 3]
        assert mesh.is_closed is False
        assert icosahedron().is_closed is True


class TestRotation:
    def test_identity(self):
        rot, trans = rotation_about_axis([0, 0, 0], [0, 1, 0], 0.0)
        assert np.allclose(rot, np.eye(3))
        assert np.allclose(trans, 0)

    def test_thirty_degrees_about_y(self):
        rot, trans = rotation_about_axis([0, 0, 0], [0, 1, 0], np.deg2rad(30))
        out = rot @ np.array([1.0, 0, 0]) + trans
        assert np.allclose(out, [np.cos(np.pi / 6), 0, -np.sin(np.pi / 6)])


class TestAngles:
    def test_orthogonal(self):
        assert angle_between([1, 0, 0], [0, 2, 0]) == pytest.approx(np.pi / 2)

    def test_normal_deviation_reference_unit(self):
        ref = [0.0, 0.0, 1.0]
        est = [0.0, np.sin(0.2), np.cos(0.2)]
        assert normal_deviation(ref, est) == pytest.approx(0.2, abs=1e-12)
