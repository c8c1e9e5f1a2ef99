"""Synthetic phantoms with known analytic geometry, for tests and demos."""

from __future__ import annotations

import numpy as np

from .contour import Polyline
from .morphometry import Landmarks2D
from .transforms import Landmarks
from .volume import Volume

__all__ = [
    "rectangle_contour",
    "half_annulus_contour",
    "disc_contour",
    "rectangle_landmarks",
    "half_annulus_landmarks",
    "rectangle_grid_mesh",
    "label_ball_volume",
    "rectangle_mask_volume",
]


def rectangle_contour(width: float = 20.0, height: float = 3.0, step: float = 0.25) -> Polyline:
    """Axis-aligned rectangle [0, width] x [0, height] sampled every ~step mm."""
    nx = max(2, int(round(width / step)))
    ny = max(2, int(round(height / step)))
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    bottom = np.column_stack([xs, np.zeros(nx + 1)])
    right = np.column_stack([np.full(ny - 1, width), ys[1:-1]])
    top = np.column_stack([xs[::-1], np.full(nx + 1, height)])
    left = np.column_stack([np.zeros(ny - 1), ys[1:-1][::-1]])
    return Polyline(np.vstack([bottom, right, top, left]), closed=True)


def half_annulus_contour(r_in: float = 2.0, r_out: float = 4.0, n_arc: int = 240) -> Polyline:
    """Upper half-annulus r_in <= r <= r_out, 0 <= theta <= pi, caps on the x axis."""
    th = np.linspace(0.0, np.pi, n_arc)
    outer = np.column_stack([r_out * np.cos(th), r_out * np.sin(th)])
    inner = np.column_stack([r_in * np.cos(th[::-1]), r_in * np.sin(th[::-1])])
    cap_n = max(2, int(round((r_out - r_in) / (np.pi * r_out / n_arc))))
    rr = np.linspace(r_in, r_out, cap_n + 1)
    cap_left = np.column_stack([-rr[::-1][1:-1], np.zeros(cap_n - 1)])
    cap_right = np.column_stack([rr[1:-1], np.zeros(cap_n - 1)])
    return Polyline(np.vstack([outer, cap_left, inner, cap_right]), closed=True)


def disc_contour(radius: float = 10.0, n: int = 360) -> Polyline:
    th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return Polyline(np.column_stack([radius * np.cos(th), radius * np.sin(th)]), closed=True)


def rectangle_landmarks(width: float = 20.0, height: float = 3.0) -> Landmarks2D:
    """AC/PC on the mid-height axis beyond the rectangle ends (AC anterior/left)."""
    return Landmarks2D(np.array([-2.0, height / 2.0]), np.array([width + 2.0, height / 2.0]))


def half_annulus_landmarks(r_in: float = 2.0, r_out: float = 4.0) -> Landmarks2D:
    """AC/PC 1 mm below the cap midpoints; the +x cap is anterior."""
    rm = (r_in + r_out) / 2.0
    return Landmarks2D(np.array([rm, -1.0]), np.array([-rm, -1.0]))


def rectangle_grid_mesh(width: float = 20.0, height: float = 3.0, step: float = 0.5):
    """Structured triangle mesh of a rectangle (grid squares split into two)."""
    from .mesh import TriMesh2D

    nx = int(round(width / step))
    ny = int(round(height / step))
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    tris = np.array(tris, dtype=np.int64)
    flags = np.zeros(len(verts), dtype=bool)
    mesh = TriMesh2D(verts, tris, flags)
    flags[np.unique(mesh.boundary_edges())] = True
    return TriMesh2D(verts, tris, flags)


def label_ball_volume(dims, centers_labels, voxel_size=(1.0, 1.0, 1.0), affine=None) -> Volume:
    """Label volume with one ball per (center_ijk, radius, label) triple."""
    data = np.zeros(dims, dtype=np.int32)
    ii, jj, kk = np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")
    for center, radius, label in centers_labels:
        m = (ii - center[0]) ** 2 + (jj - center[1]) ** 2 + (kk - center[2]) ** 2 <= radius**2
        data[m] = label
    if affine is None:
        affine = np.diag([voxel_size[0], voxel_size[1], voxel_size[2], 1.0])
    return Volume(data, voxel_size, affine)


def arch_mask_volume(
    n_inplane: int = 256,
    n_slices: int = 7,
    pixel: float = 0.5,
    r_in: float = 22.0,
    r_out: float = 30.0,
    label: int = 251,
) -> tuple:
    """A CC-like half-annulus arch in a slab-shaped label volume.

    The arch lives in the world y-z plane (slices along x); the mid-sagittal
    plane is x = 0. Returns (volume, landmarks3d).
    """
    ys = (np.arange(n_inplane) + 0.5) * pixel - n_inplane * pixel / 2.0
    zs = (np.arange(n_inplane) + 0.5) * pixel - 20.0
    yy, zz = np.meshgrid(ys, zs, indexing="ij")
    rr = np.sqrt(yy**2 + zz**2)
    arch = (rr >= r_in) & (rr <= r_out) & (zz >= 0)
    data = np.zeros((n_slices, n_inplane, n_inplane), dtype=np.int32)
    data[:, arch] = label
    affine = np.array(
        [
            [1.0, 0.0, 0.0, -(n_slices - 1) / 2.0],
            [0.0, pixel, 0.0, float(ys[0])],
            [0.0, 0.0, pixel, float(zs[0])],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    vol = Volume(data, (1.0, pixel, pixel), affine)
    rm = (r_in + r_out) / 2.0
    lm = Landmarks(np.array([0.0, rm, -6.0]), np.array([0.0, -rm, -6.0]))
    return vol, lm


def rectangle_mask_volume(
    width: float = 20.0,
    height: float = 3.0,
    n_slices: int = 7,
    pixel: float = 0.25,
    pad: float = 4.0,
    label: int = 251,
) -> tuple:
    """A slab-like label volume containing a width x height rectangle per slice.

    Returns (volume, landmarks3d) with the rectangle's long axis along world
    y and the slice axis along world x (so the mid-sagittal plane is x = 0).
    """
    ny = int(round((width + 2 * pad) / pixel))
    nz = int(round((height + 2 * pad) / pixel))
    data = np.zeros((n_slices, ny, nz), dtype=np.int32)
    ys = (np.arange(ny) + 0.5) * pixel - pad
    zs = (np.arange(nz) + 0.5) * pixel - pad
    inside_y = (ys >= 0) & (ys <= width)
    inside_z = (zs >= 0) & (zs <= height)
    data[:, np.ix_(inside_y, inside_z)[0], np.ix_(inside_y, inside_z)[1]] = label
    affine = np.array(
        [
            [1.0, 0.0, 0.0, -(n_slices - 1) / 2.0],
            [0.0, pixel, 0.0, -pad + pixel / 2.0],
            [0.0, 0.0, pixel, -pad + pixel / 2.0],
        ]
    )
    affine = np.vstack([affine, [0.0, 0.0, 0.0, 1.0]])
    vol = Volume(data, (1.0, pixel, pixel), affine)
    # AC/PC beyond the rectangle ends, below mid-height so the roll constraint
    # of the pose standardization is well defined
    lm = Landmarks(
        np.array([0.0, width + 2.0, height / 2.0 - 1.0]),
        np.array([0.0, -2.0, height / 2.0 - 1.0]),
    )
    return vol, lm
