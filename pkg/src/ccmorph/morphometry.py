"""Endpoint detection, intercallosal line, thickness profiles, and shape metrics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import fem
from .contour import Polyline, polygon_area, polyline_length, resample_polyline
from .mesh import TriMesh2D

__all__ = [
    "Landmarks2D",
    "EndpointPair",
    "ThicknessProfile",
    "ShapeSummary",
    "CCIndex",
    "find_endpoints",
    "intercallosal_line",
    "thickness_profile",
    "length_and_curvature",
    "cc_index",
    "corrected_volume",
    "shape_summary",
]


@dataclass(frozen=True)
class Landmarks2D:
    """AC and PC projected into the mid-sagittal plane frame (mm)."""

    ac: np.ndarray
    pc: np.ndarray

    def __post_init__(self):
        ac = np.asarray(self.ac, dtype=float).reshape(2)
        pc = np.asarray(self.pc, dtype=float).reshape(2)
        if np.linalg.norm(ac - pc) <= 0:
            raise ValueError("AC and PC coincide in the plane")
        object.__setattr__(self, "ac", ac)
        object.__setattr__(self, "pc", pc)

    def anterior_dir(self) -> np.ndarray:
        u = self.ac - self.pc
        return u / np.linalg.norm(u)


@dataclass(frozen=True)
class EndpointPair:
    """Indices of the anterior and posterior endpoints on a contour."""

    anterior: int
    posterior: int
    far_landmarks: bool = False  # warning flag: anchors > 50 mm from the contour box

    def __post_init__(self):
        if self.anterior == self.posterior:
            raise ValueError("endpoints must be distinct")


@dataclass(frozen=True)
class ThicknessProfile:
    """Thickness at n arc-length fractions along the intercallosal line."""

    positions: np.ndarray  # arc-length fractions in (0, 1), strictly increasing
    thickness_mm: np.ndarray  # NaN where the level path is invalid
    valid: np.ndarray
    intercallosal_length_mm: float
    curvature: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        th = np.asarray(self.thickness_mm, dtype=float)
        va = np.asarray(self.valid, dtype=bool)
        if not (len(pos) == len(th) == len(va)):
            raise ValueError("profile arrays must have equal length")
        if np.any(np.diff(pos) <= 0):
            raise ValueError("positions must be strictly increasing")
        if np.any(th[va] <= 0):
            raise ValueError("valid thickness values must be positive")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "thickness_mm", th)
        object.__setattr__(self, "valid", va)

    @property
    def n(self) -> int:
        return len(self.positions)

    def to_csv(self) -> str:
        lines = ["position_fraction,thickness_mm"]
        for p, t, v in zip(self.positions, self.thickness_mm, self.valid):
            lines.append(f"{float(p)!r},{float(t)!r}" if v else f"{float(p)!r},nan")
        return "\n".join(lines) + "\n"


class CCIndex(NamedTuple):
    raw: float  # sum of the three cut lengths, mm
    normalized: float  # raw divided by the chord length


@dataclass(frozen=True)
class ShapeSummary:
    area_mm2: float
    perimeter_mm: float
    circularity: float
    cc_index_raw: float
    cc_index_norm: float
    volume_mm3: float
    length_mm: float
    curvature_per_mm: float

    def to_dict(self) -> dict:
        return {
            "area_mm2": self.area_mm2,
            "perimeter_mm": self.perimeter_mm,
            "circularity": self.circularity,
            "cc_index_raw": self.cc_index_raw,
            "cc_index_norm": self.cc_index_norm,
            "volume_mm3": self.volume_mm3,
            "length_mm": self.length_mm,
            "curvature_per_mm": self.curvature_per_mm,
        }


def _superior_dir(lm: Landmarks2D, centroid: np.ndarray) -> np.ndarray:
    """Unit vector perpendicular to the AC-PC line pointing toward the CC."""
    u = lm.anterior_dir()
    m = np.array([-u[1], u[0]])
    s = float(m @ (np.asarray(centroid) - (lm.ac + lm.pc) / 2.0))
    return m if s >= 0 else -m


def _nearest_index(points: np.ndarray, anchor: np.ndarray) -> int:
    d2 = ((points - anchor) ** 2).sum(axis=1)
    return int(np.argmin(d2))  # argmin takes the lowest index on ties


def find_endpoints(
    contour: Polyline,
    lm: Landmarks2D,
    anterior_offset=(0.0, 0.0),
    posterior_offset=(0.0, 0.0),
) -> EndpointPair:
    """Anterior/posterior contour endpoints nearest the AC/PC anchors.

    The anchors default to AC and PC themselves; the offsets move them
    along the AC-PC line (first component, toward anterior for the anterior
    anchor and toward posterior for the posterior one) and orthogonal to it
    (second component, toward the CC side).
    """
    pts = contour.points
    u = lm.anterior_dir()
    centroid = pts.mean(axis=0)
    m = _superior_dir(lm, centroid)
    anchor_a = lm.ac + anterior_offset[0] * u + anterior_offset[1] * m
    anchor_p = lm.pc - posterior_offset[0] * u + posterior_offset[1] * m

    lo = pts.min(axis=0) - 50.0
    hi = pts.max(axis=0) + 50.0
    far = bool(
        np.any(anchor_a < lo) or np.any(anchor_a > hi) or np.any(anchor_p < lo) or np.any(anchor_p > hi)
    )
    if far:
        warnings.warn("landmarks lie more than 50 mm outside the contour bounding box")

    ia = _nearest_index(pts, anchor_a)
    ip = _nearest_index(pts, anchor_p)
    if ia == ip:
        raise ValueError("anterior and posterior endpoints coincide")
    return EndpointPair(ia, ip, far)


def _split_boundary(mesh: TriMesh2D, lm: Landmarks2D):
    """Boundary loop split at the endpoint vertices into inferior/superior arcs.

    Returns (anterior_vertex, posterior_vertex, inferior_arc, superior_arc)
    with the arcs excluding the endpoint vertices.
    """
    loop = mesh.boundary_loop()
    vpts = mesh.vertices[loop]
    u = lm.anterior_dir()
    centroid = mesh.centroids().mean(axis=0)
    m = _superior_dir(lm, centroid)

    ia = _nearest_index(vpts, lm.ac)
    ip = _nearest_index(vpts, lm.pc)
    if ia == ip:
        raise ValueError("anterior and posterior endpoints coincide")
    loop = np.roll(loop, -ia)
    ip = (ip - ia) % len(loop)
    arc1 = loop[1:ip]
    arc2 = loop[ip + 1 :]
    anterior = int(loop[0])
    posterior = int(loop[ip])

    def height(arc):
        return float((mesh.vertices[arc] @ m).mean()) if len(arc) else -np.inf

    if height(arc1) >= height(arc2):
        superior, inferior = arc1, arc2
    else:
        superior, inferior = arc2, arc1
    return anterior, posterior, inferior, superior


def intercallosal_line(mesh: TriMesh2D, lm: Landmarks2D, n: int):
    """The CC midline: zero level set of the Laplace solution.

    Splits the mesh boundary at the endpoint vertices nearest AC and PC,
    solves the Laplace equation with -1 on the inferior arc, +1 on the
    superior arc, and 0 at the two endpoints, then extracts the zero level
    set and resamples it to n + 2 equidistant points running anterior to
    posterior.

    Returns
    -------
    (line, f) : the resampled midline as an open Polyline and the per-vertex
    Laplace solution.
    """
    if n < 1:
        raise ValueError("n must be positive")
    anterior, posterior, inferior, superior = _split_boundary(mesh, lm)
    fixed = [(anterior, 0.0), (posterior, 0.0)]
    fixed += [(int(v), -1.0) for v in inferior]
    fixed += [(int(v), +1.0) for v in superior]
    f = fem.solve_dirichlet(mesh, fixed)

    comps = [c for c in fem.level_set_components(mesh, f, 0.0) if len(c["points"]) >= 2]
    if len(comps) != 1:
        raise ValueError(
            f"degenerate midline: zero level set has {len(comps)} components"
        )
    path = comps[0]["points"]
    if comps[0]["closed"]:
        raise ValueError("degenerate midline: zero level set is a closed loop")

    pa = mesh.vertices[anterior]
    if np.linalg.norm(path[0] - pa) > np.linalg.norm(path[-1] - pa):
        path = path[::-1]
    line = Polyline(resample_polyline(path, n + 2), closed=False)
    return line, f


def thickness_profile(mesh: TriMesh2D, f: np.ndarray, line: Polyline, n: int) -> ThicknessProfile:
    """Thickness at the n interior midline samples via rotated-field level sets.

    Rotates the gradients of the Laplace solution by 90 degrees, solves the
    Poisson equation for the conjugate field g, and measures the length of
    the level set of g through each interior line sample. A level path that
    does not span from the inferior to the superior boundary is flagged
    invalid (NaN) rather than interpolated.
    """
    if len(line.points) != n + 2:
        raise ValueError(f"line must have n + 2 = {n + 2} points, got {len(line.points)}")
    g_field = conjugate_field(mesh, f, line)
    locator = fem.TriangleLocator(mesh)
    samples = line.points[1:-1]
    g_at = fem.interpolate(mesh, g_field, samples, locator)

    thickness = np.full(n, np.nan)
    valid = np.zeros(n, dtype=bool)
    for k in range(n):
        comps = fem.level_set_components(mesh, g_field, float(g_at[k]))
        if not comps:
            continue
        best = min(
            comps,
            key=lambda c: float(((c["points"] - samples[k]) ** 2).sum(axis=1).min()),
        )
        if not spans_inferior_superior(f, best):
            continue
        thickness[k] = polyline_length(best["points"])
        valid[k] = thickness[k] > 0

    length, curvature = length_and_curvature(line)
    positions = np.arange(1, n + 1) / (n + 1)
    return ThicknessProfile(positions, thickness, valid, length, curvature)


def spans_inferior_superior(f: np.ndarray, component: dict) -> bool:
    """True if a level-set component runs from the inferior to the superior arc.

    Open components end on boundary mesh edges; the sign of the Laplace
    boundary values on those edges tells the arc (negative inferior,
    positive superior; the endpoint vertices themselves sit at 0).
    """
    if component["closed"] or component["end_edges"] is None:
        return False
    (u0, v0), (u1, v1) = component["end_edges"]
    return float(f[u0] + f[v0]) * float(f[u1] + f[v1]) < 0


def conjugate_field(mesh: TriMesh2D, f: np.ndarray, line: Polyline | None = None) -> np.ndarray:
    """Solve the Poisson equation for the rotated-gradient (conjugate) field."""
    rot = fem.rotate90(fem.gradient(mesh, f))
    h = fem.divergence(mesh, rot)
    anchor_vertex = 0
    if line is not None:
        # anchor at the boundary vertex closest to the anterior line end
        bidx = np.nonzero(mesh.boundary_flags)[0]
        anchor_vertex = int(bidx[_nearest_index(mesh.vertices[bidx], line.points[0])])
    return fem.solve_poisson(mesh, h, (anchor_vertex, 0.0))


def length_and_curvature(line: Polyline):
    """Arc length (mm) and mean unsigned discrete curvature (1/mm).

    Curvature at each interior sample is the turning angle divided by the
    mean of the two adjacent segment lengths; the line value is the mean
    over interior samples.
    """
    p = line.points
    length = polyline_length(p, line.closed)
    if len(p) < 3:
        return length, 0.0
    d = np.diff(p, axis=0)
    seg = np.linalg.norm(d, axis=1)
    cosang = (d[:-1] * d[1:]).sum(axis=1) / (seg[:-1] * seg[1:])
    ang = np.arccos(np.clip(cosang, -1.0, 1.0))
    mean_adjacent = 0.5 * (seg[:-1] + seg[1:])
    kappa = ang / mean_adjacent
    return float(length), float(kappa.mean())


def polygon_moments(points: np.ndarray):
    """(area, centroid, covariance) of a simple closed polygon (CCW positive)."""
    p = np.asarray(points, dtype=float)
    q = np.roll(p, -1, axis=0)
    cr = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    area = 0.5 * cr.sum()
    if area == 0:
        raise ValueError("degenerate polygon")
    cx = ((p[:, 0] + q[:, 0]) * cr).sum() / (6.0 * area)
    cy = ((p[:, 1] + q[:, 1]) * cr).sum() / (6.0 * area)
    sxx = ((p[:, 0] ** 2 + p[:, 0] * q[:, 0] + q[:, 0] ** 2) * cr).sum() / 12.0
    syy = ((p[:, 1] ** 2 + p[:, 1] * q[:, 1] + q[:, 1] ** 2) * cr).sum() / 12.0
    sxy = (
        (2 * p[:, 0] * p[:, 1] + p[:, 0] * q[:, 1] + q[:, 0] * p[:, 1] + 2 * q[:, 0] * q[:, 1]) * cr
    ).sum() / 24.0
    c = np.array([cx, cy])
    cov = np.array([[sxx, sxy], [sxy, syy]]) / area - np.outer(c, c)
    return float(area), c, cov


def _line_polygon_cut(q: np.ndarray, direction: np.ndarray, poly: np.ndarray) -> float:
    """Total in-polygon length of the line through q along direction."""
    a = poly
    b = np.roll(poly, -1, axis=0)
    e = b - a
    denom = e[:, 0] * direction[1] - e[:, 1] * direction[0]
    w = q - a
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (w[:, 0] * direction[1] - w[:, 1] * direction[0]) / denom
        s = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / -denom
    hit = np.isfinite(u) & (u >= 0.0) & (u < 1.0)
    svals = np.sort(s[hit])
    if len(svals) < 2:
        return 0.0
    if len(svals) % 2 == 1:
        raise ValueError("index undefined: cut line grazes the contour")
    return float((svals[1::2] - svals[0::2]).sum())


def cc_index(contour: Polyline) -> CCIndex:
    """Three-cut corpus callosum index of a closed contour.

    The anchor chord joins the contour extremes along the principal axis of
    the enclosed region; three cuts perpendicular to the chord are measured
    at its two ends and its midpoint, and their in-structure lengths are
    summed. Both the raw sum (mm) and the chord-normalized variant are
    returned.
    """
    pts = contour.points
    if polygon_area(pts) < 0:
        pts = pts[::-1]
    _, _, cov = polygon_moments(pts)
    evals, evecs = np.linalg.eigh(cov)
    d = evecs[:, int(np.argmax(evals))]

    proj = pts @ d
    lo, hi = proj.min(), proj.max()
    scale = max(hi - lo, 1e-12)
    p_ant = pts[proj <= lo + 1e-9 * scale].mean(axis=0)
    p_post = pts[proj >= hi - 1e-9 * scale].mean(axis=0)
    chord = p_post - p_ant
    chord_len = float(np.linalg.norm(chord))
    if chord_len <= 0:
        raise ValueError("index undefined: degenerate chord")
    cdir = chord / chord_len
    perp = np.array([-cdir[1], cdir[0]])

    eps = 1e-7
    cuts = []
    for tfrac in (eps, 0.5, 1.0 - eps):
        q = p_ant + tfrac * chord
        length = None
        for nudge in (0.0, 3e-7, -3e-7):
            try:
                length = _line_polygon_cut(q + nudge * chord_len * cdir, perp, pts)
                break
            except ValueError:
                continue
        if length is None:
            raise ValueError("index undefined: cut line grazes the contour")
        if length <= 0:
            raise ValueError("index undefined: perpendicular misses the structure")
        cuts.append(length)
    raw = float(sum(cuts))
    return CCIndex(raw, raw / chord_len)


def corrected_volume(slab_areas, spacing_mm: float, width_mm: float = 5.0) -> float:
    """Slab volume normalized to a consistent width by weighting edge slices.

    volume = spacing * (sum of interior areas + w * (first + last)) with
    w = (width - (n - 2) * spacing) / (2 * spacing), which makes the total
    integration width exactly ``width_mm`` for the slice counts produced by
    :func:`ccmorph.midplane.slice_count`.
    """
    areas = np.asarray(slab_areas, dtype=float)
    n = len(areas)
    if n == 0:
        raise ValueError("no slab areas")
    if n == 1:
        return float(width_mm * areas[0])
    w = (width_mm - (n - 2) * spacing_mm) / (2.0 * spacing_mm)
    if w < 0:
        raise ValueError("slab thicker than the target width; check slice count")
    return float(spacing_mm * (areas[1:-1].sum() + w * (areas[0] + areas[-1])))


def shape_summary(
    mesh: TriMesh2D,
    contour: Polyline,
    line: Polyline,
    slab_areas,
    spacing_mm: float,
    width_mm: float = 5.0,
) -> ShapeSummary:
    """Aggregate shape metrics for one case."""
    area = mesh.area()
    perimeter = contour.length()
    circ = 4.0 * np.pi * area / perimeter**2
    idx = cc_index(contour)
    length, curvature = length_and_curvature(line)
    vol = corrected_volume(slab_areas, spacing_mm, width_mm)
    return ShapeSummary(
        area_mm2=float(area),
        perimeter_mm=float(perimeter),
        circularity=float(circ),
        cc_index_raw=idx.raw,
        cc_index_norm=idx.normalized,
        volume_mm3=vol,
        length_mm=length,
        curvature_per_mm=curvature,
    )
