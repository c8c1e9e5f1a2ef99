import numpy as np
import pytest

from ccmorph.contour import Polyline, polygon_area
from ccmorph.phantoms import half_annulus_contour
from ccmorph.triangulate import first_self_intersection, triangulate


def _square(side=1.0):
    return Polyline(
        np.array([[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]]), closed=True
    )


class TestSquare:
    def test_quality_and_area(self, square_mesh):
        mesh = square_mesh
        assert mesh.n_triangles >= 200
        areas = mesh.signed_areas()
        assert areas.min() > 0  # all counter-clockwise, none degenerate
        assert areas.max() <= 0.005 * (1 + 1e-9)
        assert abs(areas.sum() - 1.0) < 1e-9
        angles = np.degrees(mesh.angles())
        assert angles.min() >= 20.0 - 1e-6

    def test_boundary_recovers_contour(self, square_mesh):
        mesh = square_mesh
        loop = mesh.boundary_loop()
        pts = mesh.vertices[loop]
        corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
        # every input contour vertex appears exactly on the boundary
        for c in corners:
            assert np.min(np.linalg.norm(pts - c, axis=1)) == 0.0
        # and in cyclic order
        idx = [int(np.argmin(np.linalg.norm(pts - c, axis=1))) for c in corners]
        rolled = np.argsort(idx)
        assert list(rolled) in ([0, 1, 2, 3], [1, 2, 3, 0], [2, 3, 0, 1], [3, 0, 1, 2]) or list(
            rolled[::-1]
        ) in ([0, 1, 2, 3], [1, 2, 3, 0], [2, 3, 0, 1], [3, 0, 1, 2])

    def test_euler_characteristic(self, square_mesh):
        assert square_mesh.euler_characteristic() == 1

    def test_single_component(self, square_mesh):
        mesh = square_mesh
        # union-find over triangle vertices
        parent = list(range(mesh.n_vertices))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b, c in mesh.triangles:
            for u, v in ((a, b), (b, c)):
                parent[find(int(u))] = find(int(v))
        roots = {find(v) for v in range(mesh.n_vertices)}
        assert len(roots) == 1


class TestHalfAnnulus:
    def test_area_and_quality(self, annulus_case):
        mesh = annulus_case["mesh"]
        contour = annulus_case["contour"]
        areas = mesh.signed_areas()
        assert areas.min() > 0
        # mesh area equals the boundary polygon area (interior vertices cancel)
        poly_area = abs(polygon_area(contour.points))
        assert abs(areas.sum() - poly_area) / poly_area < 1e-9
        # and is close to the analytic half-annulus area
        analytic = np.pi * (4.0**2 - 2.0**2) / 2.0
        assert abs(areas.sum() - analytic) / analytic < 0.005
        assert np.degrees(mesh.angles()).min() >= 20.0 - 1e-6
        assert areas.max() <= 0.01 * (1 + 1e-9)

    def test_half_annulus_area_tolerance(self):
        c = half_annulus_contour(2.0, 4.0)
        mesh = triangulate(c, 0.05)
        analytic = 6.0 * np.pi
        assert abs(mesh.area() - analytic) / analytic < 0.005


class TestValidation:
    def test_self_intersection_named(self):
        bow = Polyline(
            np.array([[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]]), closed=True
        )
        with pytest.raises(ValueError, match=r"segments 0 and 2"):
            triangulate(bow, 0.1)

    def test_first_self_intersection_none(self):
        assert first_self_intersection(_square().points) is None

    def test_open_contour_rejected(self):
        open_line = Polyline(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]), closed=False)
        with pytest.raises(ValueError, match="closed"):
            triangulate(open_line, 0.1)

    def test_bad_area(self):
        with pytest.raises(ValueError):
            triangulate(_square(), 0.0)

    def test_clockwise_input_accepted(self):
        cw = Polyline(_square().points[::-1], closed=True)
        mesh = triangulate(cw, 0.02)
        assert abs(mesh.area() - 1.0) < 1e-9


class TestBoundaryFlags:
    def test_flags_match_boundary_edges(self, square_mesh):
        mesh = square_mesh
        onboundary = np.zeros(mesh.n_vertices, dtype=bool)
        onboundary[np.unique(mesh.boundary_edges())] = True
        assert np.array_equal(onboundary, mesh.boundary_flags)

    def test_single_boundary_loop(self, annulus_case):
        loop = annulus_case["mesh"].boundary_loop()
        assert len(loop) == int(annulus_case["mesh"].boundary_flags.sum())


class TestOFF:
    def test_roundtrip(self, square_mesh):
        from ccmorph.mesh import TriMesh2D

        text = square_mesh.to_off()
        back = TriMesh2D.from_off(text)
        np.testing.assert_allclose(back.vertices, square_mesh.vertices)
        assert np.array_equal(back.triangles, square_mesh.triangles)
        assert np.array_equal(back.boundary_flags, square_mesh.boundary_flags)

    def test_rejects_non_off(self):
        from ccmorph.mesh import TriMesh2D

        with pytest.raises(ValueError, match="OFF"):
            TriMesh2D.from_off("PLY\n0 0 0\n")


class TestRandomBlobs:
    def test_random_smooth_blobs(self):
        rng = np.random.default_rng(5)
        for trial in range(3):
            t = np.linspace(0, 2 * np.pi, 180, endpoint=False)
            r = 8.0 + np.zeros_like(t)
            for k in range(2, 6):
                r += rng.uniform(-1.0, 1.0) * np.cos(k * t + rng.uniform(0, 2 * np.pi))
            pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
            contour = Polyline(pts, closed=True)
            mesh = triangulate(contour, 0.5)
            areas = mesh.signed_areas()
            assert areas.min() > 0
            poly = abs(polygon_area(contour.points))
            assert abs(areas.sum() - poly) / poly < 1e-9
            assert np.degrees(mesh.angles()).min() >= 20.0 - 1e-6
            assert mesh.euler_characteristic() == 1
