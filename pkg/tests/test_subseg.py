import numpy as np
import pytest

from ccmorph import morphometry as mo
from ccmorph.contour import Polyline
from ccmorph.phantoms import (
    rectangle_contour,
    rectangle_grid_mesh,
    rectangle_landmarks,
)
from ccmorph.subseg import SCHEME_KINDS, SubsegScheme, default_fractions, subsegment
from ccmorph.triangulate import triangulate


@pytest.fixture(scope="module")
def rect_fine():
    contour = rectangle_contour()
    mesh = triangulate(contour, 0.05)
    lm = rectangle_landmarks()
    line, _ = mo.intercallosal_line(mesh, lm, 100)
    return mesh, lm, line


class TestDefaults:
    def test_values(self):
        assert default_fractions("witelson") == (1 / 3, 1 / 2, 2 / 3, 4 / 5)
        assert default_fractions("jancke") == (1 / 3, 1 / 2, 2 / 3, 4 / 5)
        assert default_fractions("hofer_frahm") == (1 / 6, 1 / 2, 2 / 3, 3 / 4)
        assert default_fractions("shape_aware") == (1 / 6, 1 / 2, 2 / 3, 3 / 4)
        assert default_fractions("eigendirection") == (0.2, 0.4, 0.6, 0.8)

    def test_fractions_increasing(self):
        for kind in SCHEME_KINDS:
            fr = default_fractions(kind)
            assert all(0 < x < 1 for x in fr)
            assert all(b > a for a, b in zip(fr, fr[1:]))

    def test_scheme_validation(self):
        with pytest.raises(ValueError):
            SubsegScheme("nope")
        with pytest.raises(ValueError):
            SubsegScheme("witelson", fractions=(0.5, 0.4))
        with pytest.raises(ValueError):
            SubsegScheme("hampel", segment_count=1)


class TestEigendirection:
    def test_rectangle_equal_fifths(self):
        mesh = rectangle_grid_mesh()
        lm = rectangle_landmarks()
        res = subsegment(mesh, SubsegScheme("eigendirection", segment_count=5), lm)
        np.testing.assert_allclose(res.segment_areas_mm2, 12.0, rtol=1e-9)
        assert abs(res.segment_areas_mm2.sum() - mesh.area()) <= 1e-9 * mesh.area()

    def test_isotropic_error(self):
        from ccmorph.phantoms import disc_contour

        mesh = triangulate(disc_contour(5.0, 720), 0.5)
        lm = mo.Landmarks2D(np.array([0.0, -6.0]), np.array([0.1, -6.0]))
        with pytest.raises(ValueError, match="degenerate principal axis"):
            subsegment(mesh, SubsegScheme("eigendirection"), lm)


class TestShapeAware:
    def test_rectangle_proportions(self, rect_fine):
        mesh, lm, line = rect_fine
        res = subsegment(mesh, SubsegScheme("shape_aware"), lm, line)
        props = res.segment_areas_mm2 / mesh.area()
        target = np.array([1 / 6, 1 / 3, 1 / 6, 1 / 12, 1 / 4])
        assert np.abs(props - target).max() < 0.005

    def test_needs_line(self, rect_fine):
        mesh, lm, _ = rect_fine
        with pytest.raises(ValueError, match="intercallosal line"):
            subsegment(mesh, SubsegScheme("shape_aware"), lm, None)

    def test_cuts_perpendicular_to_line(self, annulus_case):
        """Realized label interfaces meet the intercallosal line at 90 +/- 3 deg."""
        mesh = annulus_case["mesh"]
        lm = annulus_case["lm"]
        line = annulus_case["line"]
        res = subsegment(mesh, SubsegScheme("shape_aware"), lm, line)
        assert abs(res.segment_areas_mm2.sum() - mesh.area()) <= 1e-9 * mesh.area()
        # measure each cut's direction from the labeled mesh itself: PCA of
        # the midpoints of edges whose adjacent triangles carry different labels
        labels = res.triangle_labels
        tri = mesh.triangles
        edge_owner = {}
        interfaces = {}
        for tid in range(mesh.n_triangles):
            a, b, c = tri[tid]
            for u, v in ((a, b), (b, c), (c, a)):
                key = (min(u, v), max(u, v))
                other = edge_owner.pop(key, None)
                if other is None:
                    edge_owner[key] = tid
                elif labels[other] != labels[tid]:
                    k = min(labels[other], labels[tid])
                    mid = mesh.vertices[[u, v]].mean(axis=0)
                    interfaces.setdefault(int(k), []).append(mid)
        pts = line.points
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        total = s[-1]
        for k, frac in enumerate((1 / 6, 1 / 2, 2 / 3, 3 / 4)):
            mids = np.asarray(interfaces[k])
            assert len(mids) >= 4
            centered = mids - mids.mean(axis=0)
            _, _, vt = np.linalg.svd(centered, full_matrices=False)
            cut_dir = vt[0]
            target = frac * total
            j = min(max(int(np.searchsorted(s, target) - 1), 0), len(seg) - 1)
            tang = (pts[j + 1] - pts[j]) / seg[j]
            ang = np.degrees(np.arccos(np.clip(abs(cut_dir @ tang), 0.0, 1.0)))
            assert abs(ang - 90.0) <= 3.0

    def test_straight_midline_matches_axis_schemes(self, rect_fine):
        mesh, lm, line = rect_fine
        fr = (1 / 6, 1 / 2, 2 / 3, 3 / 4)
        res_sa = subsegment(mesh, SubsegScheme("shape_aware", fractions=fr), lm, line)
        res_hf = subsegment(mesh, SubsegScheme("hofer_frahm", fractions=fr), lm)
        res_wi = subsegment(mesh, SubsegScheme("witelson", fractions=fr), lm)
        res_ja = subsegment(mesh, SubsegScheme("jancke", fractions=fr), lm)
        total = mesh.area()
        for res in (res_hf, res_wi, res_ja):
            assert np.abs(res.segment_areas_mm2 - res_sa.segment_areas_mm2).max() / total < 0.005


class TestPartitionProperties:
    @pytest.mark.parametrize("kind", SCHEME_KINDS)
    def test_every_triangle_labeled_and_areas_sum(self, kind, rect_fine):
        mesh, lm, line = rect_fine
        res = subsegment(mesh, SubsegScheme(kind), lm, line)
        assert len(res.triangle_labels) == mesh.n_triangles
        assert res.triangle_labels.min() >= 0
        assert res.triangle_labels.max() < res.scheme.segment_count
        total = mesh.area()
        assert abs(res.segment_areas_mm2.sum() - total) <= 1e-9 * total

    @pytest.mark.parametrize("kind", SCHEME_KINDS)
    def test_random_phantoms_partition(self, kind):
        rng = np.random.default_rng(hash(kind) % 2**31)
        for _ in range(3):
            t = np.linspace(0, 2 * np.pi, 140, endpoint=False)
            r = 8.0 + np.zeros_like(t)
            for kk in range(2, 5):
                r += rng.uniform(-0.8, 0.8) * np.cos(kk * t + rng.uniform(0, 2 * np.pi))
            pts = np.column_stack([1.6 * r * np.cos(t), r * np.sin(t)])
            contour = Polyline(pts, closed=True)
            mesh = triangulate(contour, 1.0)
            lm = mo.Landmarks2D(np.array([20.0, -12.0]), np.array([-20.0, -12.0]))
            line = None
            if kind == "shape_aware":
                line, _ = mo.intercallosal_line(mesh, lm, 40)
            res = subsegment(mesh, SubsegScheme(kind), lm, line)
            total = mesh.area()
            assert abs(res.segment_areas_mm2.sum() - total) <= 1e-9 * total

    def test_rigid_equivariance(self):
        # rigidly moving the mesh and landmarks together leaves segment areas
        # unchanged (the schemes are covariant constructions)
        from ccmorph.mesh import TriMesh2D

        contour = rectangle_contour(step=0.5)
        lm = rectangle_landmarks()
        mesh = triangulate(contour, 0.25)
        a = np.radians(25.0)
        R = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        tvec = np.array([5.0, 9.0])
        mesh2 = TriMesh2D(mesh.vertices @ R.T + tvec, mesh.triangles, mesh.boundary_flags)
        lm2 = mo.Landmarks2D(R @ lm.ac + tvec, R @ lm.pc + tvec)
        for kind in ("witelson", "jancke", "hofer_frahm", "eigendirection"):
            r1 = subsegment(mesh, SubsegScheme(kind), lm)
            r2 = subsegment(mesh2, SubsegScheme(kind), lm2)
            total = mesh.area()
            assert np.abs(r1.segment_areas_mm2 - r2.segment_areas_mm2).max() / total < 1e-6

    def test_remeshed_rotation_stability(self):
        # re-triangulating the rotated contour changes the mesh; areas only
        # move by centroid-labeling noise at the cut lines
        contour = rectangle_contour(step=0.5)
        lm = rectangle_landmarks()
        mesh = triangulate(contour, 0.25)
        a = np.radians(25.0)
        R = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        tvec = np.array([5.0, 9.0])
        moved = Polyline(contour.points @ R.T + tvec, closed=True)
        lm2 = mo.Landmarks2D(R @ lm.ac + tvec, R @ lm.pc + tvec)
        mesh2 = triangulate(moved, 0.25)
        for kind in ("jancke", "hofer_frahm", "eigendirection"):
            r1 = subsegment(mesh, SubsegScheme(kind), lm)
            r2 = subsegment(mesh2, SubsegScheme(kind), lm2)
            total = mesh.area()
            assert np.abs(r1.segment_areas_mm2 - r2.segment_areas_mm2).max() / total < 0.02

    def test_empty_segment_allowed(self):
        # fractions so extreme that the first segment holds (almost) nothing;
        # a cut missing all centroids must not raise
        mesh = rectangle_grid_mesh(20.0, 3.0, 0.5)
        lm = rectangle_landmarks()
        res = subsegment(mesh, SubsegScheme("witelson", fractions=(0.001, 0.5)), lm)
        assert res.segment_areas_mm2[0] == 0.0

    def test_hampel_posterior_first(self):
        mesh = rectangle_grid_mesh()
        lm = rectangle_landmarks()  # AC at x < 0 side: anterior is -x
        res = subsegment(mesh, SubsegScheme("hampel", segment_count=5), lm)
        cent = mesh.centroids()
        lab = res.triangle_labels
        # segment 0 is the most posterior sector (largest x here)
        assert cent[lab == 0][:, 0].mean() > cent[lab == 4][:, 0].mean()

    def test_csv_export(self, rect_fine):
        mesh, lm, line = rect_fine
        res = subsegment(mesh, SubsegScheme("hofer_frahm"), lm)
        csv = res.to_csv()
        lines = csv.strip().split("\n")
        assert lines[0] == "scheme,segment_id,area_mm2"
        assert len(lines) == 6
