"""Quality triangulation of simple closed contours.

Incremental Bowyer-Watson Delaunay with exact integer predicates (input
coordinates are snapped to a fine integer grid for the predicates only;
output vertices keep their original float coordinates), boundary conformity
by diametral-circle encroachment splitting, and Ruppert-style refinement to
a minimum angle and maximum triangle area. The boundary of the result
contains every input contour vertex.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .contour import Polyline, polygon_area
from .mesh import TriMesh2D

__all__ = ["triangulate", "first_self_intersection"]


def first_self_intersection(points: np.ndarray):
    """Index pair (i, j) of the first intersecting segment pair, or None.

    Segments i and j are ``points[i]-points[i+1]`` (cyclic); adjacent
    segments sharing an endpoint are ignored.
    """
    p = np.asarray(points, dtype=float)
    n = len(p)
    a = p
    b = np.roll(p, -1, axis=0)

    def orient(p0, p1, q):
        return (p1[..., 0] - p0[..., 0]) * (q[..., 1] - p0[..., 1]) - (
            p1[..., 1] - p0[..., 1]
        ) * (q[..., 0] - p0[..., 0])

    for i in range(n - 2):
        # candidate partners: j > i, not adjacent
        j0 = i + 2
        j1 = n if i > 0 else n - 1
        if j0 >= j1:
            continue
        aj = a[j0:j1]
        bj = b[j0:j1]
        d1 = orient(a[i], b[i], aj)
        d2 = orient(a[i], b[i], bj)
        d3 = orient(aj, bj, a[i])
        d4 = orient(aj, bj, b[i])
        proper = ((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0))
        touching = (d1 == 0) | (d2 == 0) | (d3 == 0) | (d4 == 0)
        # collinear overlap / endpoint touching counts as non-simple too,
        # but only if the bounding boxes overlap
        if touching.any():
            lo_i = np.minimum(a[i], b[i])
            hi_i = np.maximum(a[i], b[i])
            lo_j = np.minimum(aj, bj)
            hi_j = np.maximum(aj, bj)
            bbox = np.all(lo_i <= hi_j, axis=1) & np.all(lo_j <= hi_i, axis=1)
            # a touch is a true degeneracy only when the straddle test also
            # says the segments meet
            d1z = (d1 == 0) & _on_segment(a[i], b[i], aj)
            d2z = (d2 == 0) & _on_segment(a[i], b[i], bj)
            d3z = (d3 == 0) & _on_segment(aj, bj, np.broadcast_to(a[i], aj.shape))
            d4z = (d4 == 0) & _on_segment(aj, bj, np.broadcast_to(b[i], aj.shape))
            proper = proper | (bbox & (d1z | d2z | d3z | d4z))
        hits = np.nonzero(proper)[0]
        if hits.size:
            return i, int(hits[0] + j0)
    return None


def _on_segment(p0, p1, q):
    lo = np.minimum(p0, p1)
    hi = np.maximum(p0, p1)
    return np.all((q >= lo) & (q <= hi), axis=-1)


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd rule point-in-polygon test, vectorized over points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.asarray(poly, dtype=float)
    b = np.roll(a, -1, axis=0)
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    ya, yb = a[:, 1][None, :], b[:, 1][None, :]
    xa, xb = a[:, 0][None, :], b[:, 0][None, :]
    cond = (ya <= y) != (yb <= y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = xa + (y - ya) * (xb - xa) / (yb - ya)
    crossings = cond & (x < xs)
    return crossings.sum(axis=1) % 2 == 1


def _dist_to_segments(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Min distance from each point to a set of segments (points x 1 result)."""
    pts = np.atleast_2d(points)
    d = b - a
    l2 = (d * d).sum(axis=1)
    l2 = np.where(l2 == 0, 1.0, l2)
    t = ((pts[:, None, :] - a[None, :, :]) * d[None, :, :]).sum(axis=2) / l2[None, :]
    t = np.clip(t, 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * d[None, :, :]
    dist = np.linalg.norm(pts[:, None, :] - proj, axis=2)
    return dist.min(axis=1)


class _Triangulator:
    """Incremental Delaunay with integer-exact predicates."""

    def __init__(self, bbox_lo, bbox_hi):
        extent = max(bbox_hi[0] - bbox_lo[0], bbox_hi[1] - bbox_lo[1], 1e-9)
        self.scale = (2.0**31) / (8.0 * extent)
        self.fx = []  # float coords
        self.fy = []
        self.ix = []  # snapped int coords (predicates only)
        self.iy = []
        self.by_int = {}
        self.tris = {}  # tid -> (a, b, c) counter-clockwise
        self.edge2tri = {}  # directed edge (u, v) -> tid
        self.next_tid = 0
        self.last_tid = None
        self.on_new_triangle = None  # callback(tid)

        cx = (bbox_lo[0] + bbox_hi[0]) / 2.0
        cy = (bbox_lo[1] + bbox_hi[1]) / 2.0
        L = 4.0 * extent
        self._add_point(cx - 3.0 * L, cy - 2.0 * L)
        self._add_point(cx + 3.0 * L, cy - 2.0 * L)
        self._add_point(cx, cy + 3.0 * L)
        self._make_tri(0, 1, 2)

    # -- low-level helpers -------------------------------------------------

    def _snap(self, x, y):
        return int(round(x * self.scale)), int(round(y * self.scale))

    def _add_point(self, x, y):
        key = self._snap(x, y)
        if key in self.by_int:
            return self.by_int[key], False
        vid = len(self.fx)
        self.fx.append(float(x))
        self.fy.append(float(y))
        self.ix.append(key[0])
        self.iy.append(key[1])
        self.by_int[key] = vid
        return vid, True

    def _orient(self, a, b, c):
        ix, iy = self.ix, self.iy
        return (ix[b] - ix[a]) * (iy[c] - iy[a]) - (iy[b] - iy[a]) * (ix[c] - ix[a])

    def _incircle(self, a, b, c, d):
        """> 0 iff d strictly inside the circumcircle of CCW triangle abc."""
        ix, iy = self.ix, self.iy
        adx = ix[a] - ix[d]
        ady = iy[a] - iy[d]
        bdx = ix[b] - ix[d]
        bdy = iy[b] - iy[d]
        cdx = ix[c] - ix[d]
        cdy = iy[c] - iy[d]
        ad2 = adx * adx + ady * ady
        bd2 = bdx * bdx + bdy * bdy
        cd2 = cdx * cdx + cdy * cdy
        return (
            adx * (bdy * cd2 - cdy * bd2)
            - ady * (bdx * cd2 - cdx * bd2)
            + ad2 * (bdx * cdy - cdx * bdy)
        )

    def _make_tri(self, a, b, c):
        tid = self.next_tid
        self.next_tid += 1
        self.tris[tid] = (a, b, c)
        self.edge2tri[(a, b)] = tid
        self.edge2tri[(b, c)] = tid
        self.edge2tri[(c, a)] = tid
        self.last_tid = tid
        if self.on_new_triangle is not None:
            self.on_new_triangle(tid)
        return tid

    def _drop_tri(self, tid):
        a, b, c = self.tris.pop(tid)
        for e in ((a, b), (b, c), (c, a)):
            if self.edge2tri.get(e) == tid:
                del self.edge2tri[e]

    def _locate(self, vid, hint=None):
        """Visibility walk to a triangle containing vertex vid; None if outside."""
        tid = hint if hint in self.tris else self.last_tid
        if tid not in self.tris:
            tid = next(iter(self.tris))
        guard = 4 * len(self.tris) + 64
        while guard:
            guard -= 1
            a, b, c = self.tris[tid]
            if self._orient(a, b, vid) < 0:
                tid = self.edge2tri.get((b, a))
            elif self._orient(b, c, vid) < 0:
                tid = self.edge2tri.get((c, b))
            elif self._orient(c, a, vid) < 0:
                tid = self.edge2tri.get((a, c))
            else:
                return tid
            if tid is None:
                return None
        raise RuntimeError("point location walk failed to terminate")

    # -- insertion ---------------------------------------------------------

    def insert(self, x, y, hint=None):
        """Insert a point; returns (vertex id, list of cavity tids removed).

        Returns (vid, None) when the point coincides with an existing vertex.
        """
        vid, fresh = self._add_point(x, y)
        if not fresh:
            return vid, None
        t0 = self._locate(vid, hint)
        if t0 is None:
            # outside the triangulation: undo the point registration
            self.by_int.pop((self.ix[vid], self.iy[vid]))
            self.fx.pop(), self.fy.pop(), self.ix.pop(), self.iy.pop()
            return None, None

        cavity = {t0}
        stack = [t0]
        while stack:
            t = stack.pop()
            a, b, c = self.tris[t]
            for u, v in ((a, b), (b, c), (c, a)):
                nb = self.edge2tri.get((v, u))
                if nb is None or nb in cavity:
                    continue
                na, nbv, nc = self.tris[nb]
                if self._incircle(na, nbv, nc, vid) > 0:
                    cavity.add(nb)
                    stack.append(nb)

        # boundary edges must see the new point strictly; pull grazed
        # neighbors (cocircular degeneracies) into the cavity
        while True:
            boundary = []
            grazed = []
            for t in cavity:
                a, b, c = self.tris[t]
                for u, v in ((a, b), (b, c), (c, a)):
                    nb = self.edge2tri.get((v, u))
                    if nb in cavity:
                        continue
                    if self._orient(u, v, vid) <= 0:
                        if nb is None:
                            raise RuntimeError("degenerate insertion at the hull")
                        grazed.append(nb)
                    else:
                        boundary.append((u, v))
            if not grazed:
                break
            cavity.update(grazed)

        for t in cavity:
            self._drop_tri(t)
        for u, v in boundary:
            self._make_tri(u, v, vid)
        return vid, list(cavity)

    # -- geometry in float coordinates --------------------------------------

    def coords(self, vid):
        return self.fx[vid], self.fy[vid]

    def tri_coords(self, tid):
        a, b, c = self.tris[tid]
        fx, fy = self.fx, self.fy
        return (fx[a], fy[a]), (fx[b], fy[b]), (fx[c], fy[c])


def _tri_quality(pa, pb, pc):
    """(area, min_angle_degrees) of a float triangle."""
    ax, ay = pa
    bx, by = pb
    cx, cy = pc
    area = 0.5 * ((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))
    l2a = (cx - bx) ** 2 + (cy - by) ** 2  # edge opposite a
    l2b = (cx - ax) ** 2 + (cy - ay) ** 2
    l2c = (bx - ax) ** 2 + (by - ay) ** 2
    if area <= 0:
        return area, 0.0
    # min angle is opposite the shortest edge; sin(A) = 2*area/(b*c)
    l2min = min(l2a, l2b, l2c)
    if l2min == l2a:
        denom = np.sqrt(l2b * l2c)
    elif l2min == l2b:
        denom = np.sqrt(l2a * l2c)
    else:
        denom = np.sqrt(l2a * l2b)
    s = min(max(2.0 * area / denom, -1.0), 1.0)
    return area, float(np.degrees(np.arcsin(s)))


def _circumcenter(pa, pb, pc):
    ax, ay = pa
    bx, by = pb
    cx, cy = pc
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0:
        return None
    a2 = ax * ax + ay * ay
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    return ux, uy


class _Refiner:
    """Conforming Delaunay refinement driver for one polygon."""

    def __init__(self, poly: np.ndarray, max_area: float, min_angle: float):
        self.poly = poly
        self.max_area = float(max_area)
        self.min_angle = float(min_angle)
        lo = poly.min(axis=0)
        hi = poly.max(axis=0)
        self.tr = _Triangulator(lo, hi)
        self.work = deque()
        self.inside = {}
        self.tr.on_new_triangle = self._new_tri_hook
        self._inherit_flag = None

        # contour vertices and directed constraint segments
        self.contour_vids = []
        for x, y in poly:
            vid, cavity = self.tr.insert(x, y)
            if vid is None or cavity is None:
                raise ValueError("contour points coincide after snapping; contour too fine")
            self.contour_vids.append(vid)
        n = len(self.contour_vids)
        self.segs = {}  # directed (u, v) -> True, split into halves over time
        for k in range(n):
            u = self.contour_vids[k]
            v = self.contour_vids[(k + 1) % n]
            self.segs[(u, v)] = True
        self.unsplittable = set()
        self._seg_cache = None

    # -- segment bookkeeping -------------------------------------------------

    def _seg_arrays(self):
        if self._seg_cache is None:
            fx = np.asarray(self.tr.fx)
            fy = np.asarray(self.tr.fy)
            uv = np.array(list(self.segs.keys()), dtype=np.int64)
            pa = np.column_stack([fx[uv[:, 0]], fy[uv[:, 0]]])
            pb = np.column_stack([fx[uv[:, 1]], fy[uv[:, 1]]])
            mid = 0.5 * (pa + pb)
            r2 = ((pa - pb) ** 2).sum(axis=1) / 4.0
            self._seg_cache = (uv, mid, r2)
        return self._seg_cache

    def _encroached_by(self, x, y):
        uv, mid, r2 = self._seg_arrays()
        d2 = (mid[:, 0] - x) ** 2 + (mid[:, 1] - y) ** 2
        hits = np.nonzero(d2 < r2 * (1.0 - 1e-12))[0]
        return [tuple(uv[i]) for i in hits]

    def _split_segment(self, seg):
        """Insert the midpoint of a constraint segment; returns new vertex or None."""
        if seg not in self.segs or seg in self.unsplittable:
            return None
        u, v = seg
        x = 0.5 * (self.tr.fx[u] + self.tr.fx[v])
        y = 0.5 * (self.tr.fy[u] + self.tr.fy[v])
        vid, cavity = self.tr.insert(x, y, hint=self.tr.edge2tri.get((u, v)))
        if vid is None or cavity is None:
            self.unsplittable.add(seg)
            return None
        del self.segs[seg]
        self.segs[(u, vid)] = True
        self.segs[(vid, v)] = True
        self._seg_cache = None
        return vid

    def _resolve_encroachments(self, x, y):
        """Split every segment whose diametral circle contains (x, y), recursively."""
        stack = [(x, y)]
        while stack:
            px, py = stack.pop()
            for seg in self._encroached_by(px, py):
                m = self._split_segment(seg)
                if m is not None:
                    stack.append((self.tr.fx[m], self.tr.fy[m]))

    # -- inside bookkeeping ---------------------------------------------------

    def _new_tri_hook(self, tid):
        if self._inherit_flag is not None:
            self.inside[tid] = self._inherit_flag
            if self._inherit_flag:
                self.work.append(tid)

    def _insert_tracked(self, x, y, inherit, hint=None):
        self._inherit_flag = inherit
        try:
            vid, cavity = self.tr.insert(x, y, hint)
        finally:
            self._inherit_flag = None
        if cavity:
            for t in cavity:
                self.inside.pop(t, None)
        return vid, cavity

    def _flood_inside(self):
        """Exact interior classification from the directed constraint edges."""
        inside = {}
        seeds = []
        for (u, v) in self.segs:
            t = self.tr.edge2tri.get((u, v))
            if t is not None:
                seeds.append(t)
        blocked = set()
        for (u, v) in self.segs:
            blocked.add((u, v))
            blocked.add((v, u))
        seen = set(seeds)
        dq = deque(seeds)
        while dq:
            t = dq.popleft()
            inside[t] = True
            a, b, c = self.tr.tris[t]
            for u, v in ((a, b), (b, c), (c, a)):
                if (u, v) in blocked:
                    continue
                nb = self.tr.edge2tri.get((v, u))
                if nb is not None and nb not in seen:
                    seen.add(nb)
                    dq.append(nb)
        for t in self.tr.tris:
            inside.setdefault(t, False)
        return inside

    # -- phases ----------------------------------------------------------------

    def initial_conformity(self):
        """Split any segment encroached by an existing vertex."""
        changed = True
        while changed:
            changed = False
            fx = np.asarray(self.tr.fx)
            fy = np.asarray(self.tr.fy)
            for seg in list(self.segs.keys()):
                if seg not in self.segs:
                    continue
                u, v = seg
                mx = 0.5 * (fx[u] + fx[v])
                my = 0.5 * (fy[u] + fy[v])
                r2 = ((fx[u] - fx[v]) ** 2 + (fy[u] - fy[v]) ** 2) / 4.0
                d2 = (fx - mx) ** 2 + (fy - my) ** 2
                d2[u] = np.inf
                d2[v] = np.inf
                if (d2 < r2 * (1.0 - 1e-12)).any():
                    m = self._split_segment(seg)
                    if m is not None:
                        self._resolve_encroachments(self.tr.fx[m], self.tr.fy[m])
                        changed = True
                        fx = np.asarray(self.tr.fx)
                        fy = np.asarray(self.tr.fy)

    def presplit_long_segments(self, target_len: float):
        changed = True
        while changed:
            changed = False
            for seg in list(self.segs.keys()):
                if seg not in self.segs:
                    continue
                u, v = seg
                L = np.hypot(self.tr.fx[u] - self.tr.fx[v], self.tr.fy[u] - self.tr.fy[v])
                if L > 1.3 * target_len:
                    m = self._split_segment(seg)
                    if m is not None:
                        self._resolve_encroachments(self.tr.fx[m], self.tr.fy[m])
                        changed = True

    def seed_grid(self, spacing: float):
        """Hex-grid interior points away from the boundary."""
        lo = self.poly.min(axis=0)
        hi = self.poly.max(axis=0)
        dy = spacing * np.sqrt(3.0) / 2.0
        ys = np.arange(lo[1] + 0.5 * dy, hi[1], dy)
        cand = []
        for row, y in enumerate(ys):
            off = 0.5 * spacing if row % 2 else 0.0
            xs = np.arange(lo[0] + 0.5 * spacing + off, hi[0], spacing)
            cand.append(np.column_stack([xs, np.full(len(xs), y)]))
        if not cand:
            return
        cand = np.vstack(cand)
        ok = points_in_polygon(cand, self.poly)
        cand = cand[ok]
        if not len(cand):
            return
        a = self.poly
        b = np.roll(a, -1, axis=0)
        margin = 0.62 * spacing
        # chunk the distance test to bound memory
        keep = np.zeros(len(cand), dtype=bool)
        step = max(1, int(2e6 / max(len(a), 1)))
        for s in range(0, len(cand), step):
            keep[s : s + step] = _dist_to_segments(cand[s : s + step], a, b) > margin
        cand = cand[keep]
        for x, y in cand:
            if self._encroached_by(x, y):
                continue
            self._insert_tracked(x, y, inherit=None)

    def refine(self):
        max_rounds = 40
        budget = 40 * len(self.tr.fx) + int(20.0 * abs(polygon_area(self.poly)) / self.max_area) + 4000
        for _ in range(max_rounds):
            self.inside = self._flood_inside()
            self.work = deque(t for t, flag in self.inside.items() if flag)
            progressed = self._refine_pass(budget)
            # verify: every inside triangle meets quality and all constraint
            # segments are edges of the triangulation
            missing = [s for s in self.segs if s not in self.tr.edge2tri]
            for seg in missing:
                m = self._split_segment(seg)
                if m is not None:
                    self._resolve_encroachments(self.tr.fx[m], self.tr.fy[m])
            self.inside = self._flood_inside()
            bad = [
                t
                for t, flag in self.inside.items()
                if flag and self._is_bad(t)
            ]
            if not bad and not missing:
                return
            if not progressed and not missing:
                break
        raise RuntimeError("mesh refinement did not converge")

    def _is_bad(self, tid):
        area, ang = _tri_quality(*self.tr.tri_coords(tid))
        return area > self.max_area * (1.0 + 1e-12) or ang < self.min_angle - 1e-9

    def _refine_pass(self, budget):
        progressed = False
        stall = set()
        while self.work:
            if budget <= 0:
                raise RuntimeError("mesh refinement exceeded its insertion budget")
            tid = self.work.popleft()
            if tid not in self.tr.tris or not self.inside.get(tid, False):
                continue
            if not self._is_bad(tid) or tid in stall:
                continue
            cc = _circumcenter(*self.tr.tri_coords(tid))
            inserted = False
            if cc is not None:
                enc = self._encroached_by(cc[0], cc[1])
                if enc:
                    for seg in enc:
                        m = self._split_segment(seg)
                        if m is not None:
                            self._resolve_encroachments(self.tr.fx[m], self.tr.fy[m])
                            inserted = True
                            budget -= 1
                    if tid in self.tr.tris:
                        self.work.append(tid)
                    if not inserted:
                        stall.add(tid)
                    progressed = progressed or inserted
                    continue
                vid, cavity = self._insert_tracked(
                    cc[0], cc[1], inherit=self.inside.get(tid, True), hint=tid
                )
                if vid is not None and cavity is not None:
                    self._resolve_encroachments(cc[0], cc[1])
                    inserted = True
                    budget -= 1
            if not inserted:
                # fallback: split the longest edge of the bad triangle
                (ax, ay), (bx, by), (cx, cy) = self.tr.tri_coords(tid)
                pts = ((ax, ay), (bx, by), (cx, cy))
                l2 = [
                    (pts[(k + 1) % 3][0] - pts[(k + 2) % 3][0]) ** 2
                    + (pts[(k + 1) % 3][1] - pts[(k + 2) % 3][1]) ** 2
                    for k in range(3)
                ]
                k = int(np.argmax(l2))
                mx = 0.5 * (pts[(k + 1) % 3][0] + pts[(k + 2) % 3][0])
                my = 0.5 * (pts[(k + 1) % 3][1] + pts[(k + 2) % 3][1])
                vid, cavity = self._insert_tracked(
                    mx, my, inherit=self.inside.get(tid, True), hint=tid
                )
                if vid is not None and cavity is not None:
                    self._resolve_encroachments(mx, my)
                    inserted = True
                    budget -= 1
                else:
                    stall.add(tid)
            progressed = progressed or inserted
        return progressed

    def extract(self) -> TriMesh2D:
        inside = self._flood_inside()
        tids = sorted(t for t, flag in inside.items() if flag)
        if not tids:
            raise RuntimeError("triangulation produced no interior triangles")
        used = sorted({v for t in tids for v in self.tr.tris[t]})
        remap = {v: i for i, v in enumerate(used)}
        verts = np.column_stack(
            [np.asarray(self.tr.fx)[used], np.asarray(self.tr.fy)[used]]
        )
        tris = np.array([[remap[v] for v in self.tr.tris[t]] for t in tids], dtype=np.int64)
        flags = np.zeros(len(used), dtype=bool)
        mesh = TriMesh2D(verts, tris, flags)
        flags = np.zeros(len(used), dtype=bool)
        flags[np.unique(mesh.boundary_edges())] = True
        return TriMesh2D(verts, tris, flags)


def triangulate(contour: Polyline, max_area_mm2: float, min_angle_deg: float = 20.0) -> TriMesh2D:
    """Constrained quality triangulation of a simple closed contour.

    Every contour vertex appears on the mesh boundary and the contour is
    preserved as the boundary (possibly subdivided). Interior refinement
    enforces triangle area <= ``max_area_mm2`` and minimum angle >=
    ``min_angle_deg``.

    Raises
    ------
    ValueError
        For open, self-intersecting, or degenerate contours; the
        self-intersection error names the first intersecting segment pair.
    """
    if not isinstance(contour, Polyline) or not contour.closed:
        raise ValueError("triangulate requires a closed contour")
    if max_area_mm2 <= 0:
        raise ValueError("max_area must be positive")
    pts = contour.points
    hit = first_self_intersection(pts)
    if hit is not None:
        raise ValueError(
            f"contour is self-intersecting: segments {hit[0]} and {hit[1]} intersect"
        )
    area = polygon_area(pts)
    if area == 0:
        raise ValueError("contour encloses zero area")
    if area < 0:
        pts = pts[::-1]

    ref = _Refiner(np.asarray(pts, dtype=float), max_area_mm2, min_angle_deg)
    target_len = float(np.sqrt(max_area_mm2 * 4.0 / np.sqrt(3.0)))
    ref.initial_conformity()
    ref.presplit_long_segments(target_len)
    ref.seed_grid(target_len)
    ref.refine()
    return ref.extract()
