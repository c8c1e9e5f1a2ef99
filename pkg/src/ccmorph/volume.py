"""3D volumes and NIfTI-1 single-file I/O.

Volumes are stored with the data array indexed ``data[x, y, z]`` (x fastest
on disk, i.e. Fortran layout) together with per-axis voxel sizes and a 4x4
voxel-to-world affine. World coordinates follow the NIfTI RAS convention.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass

import numpy as np

__all__ = ["Volume", "NiftiError", "load_volume", "save_volume"]


class NiftiError(ValueError):
    """Malformed or unsupported NIfTI-1 file."""


# NIfTI-1 datatype code -> numpy dtype (unscaled, on-disk)
_DTYPES = {
    2: np.uint8,
    4: np.int16,
    8: np.int32,
    16: np.float32,
    64: np.float64,
    256: np.int8,
    512: np.uint16,
    768: np.uint32,
    1024: np.int64,
    1280: np.uint64,
}
_DTYPE_CODES = {np.dtype(v): k for k, v in _DTYPES.items()}

_HDR_SIZE = 348


@dataclass(frozen=True)
class Volume:
    """A 3D scalar or integer-label grid with world geometry.

    Attributes
    ----------
    data : np.ndarray
        Shape ``(nx, ny, nz)``, indexed x-fastest.
    voxel_size : np.ndarray
        mm per axis, shape (3,), all > 0.
    affine : np.ndarray
        4x4 voxel-index-to-world-mm map (applied to voxel centers).
    """

    data: np.ndarray
    voxel_size: np.ndarray
    affine: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise ValueError(f"volume data must be 3D, got shape {data.shape}")
        voxel_size = np.asarray(self.voxel_size, dtype=float).reshape(3)
        affine = np.asarray(self.affine, dtype=float).reshape(4, 4)
        if np.any(voxel_size <= 0):
            raise ValueError(f"voxel sizes must be positive, got {voxel_size}")
        if abs(np.linalg.det(affine[:3, :3])) < 1e-12:
            raise NiftiError("singular affine")
        # expose read-only views; types are immutable after construction
        data, voxel_size, affine = data.view(), voxel_size.view(), affine.view()
        for arr in (data, voxel_size, affine):
            arr.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "voxel_size", voxel_size)
        object.__setattr__(self, "affine", affine)

    @property
    def dims(self) -> tuple:
        return self.data.shape

    def voxel_to_world(self, ijk: np.ndarray) -> np.ndarray:
        """Map voxel indices (n, 3) to world mm coordinates (n, 3)."""
        ijk = np.atleast_2d(np.asarray(ijk, dtype=float))
        return ijk @ self.affine[:3, :3].T + self.affine[:3, 3]

    def world_to_voxel(self, xyz: np.ndarray) -> np.ndarray:
        xyz = np.atleast_2d(np.asarray(xyz, dtype=float))
        inv = np.linalg.inv(self.affine)
        return xyz @ inv[:3, :3].T + inv[:3, 3]

    def world_center(self) -> np.ndarray:
        """World position of the grid center."""
        c = (np.array(self.dims, dtype=float) - 1.0) / 2.0
        return self.voxel_to_world(c)[0]

    def world_corners(self) -> np.ndarray:
        """World positions of the 8 outermost voxel centers, shape (8, 3)."""
        nx, ny, nz = self.dims
        ijk = np.array(
            [[i, j, k] for i in (0, nx - 1) for j in (0, ny - 1) for k in (0, nz - 1)],
            dtype=float,
        )
        return self.voxel_to_world(ijk)

    def is_label_map(self) -> bool:
        d = self.data
        if not np.issubdtype(d.dtype, np.integer):
            return False
        return bool(d.min() >= 0)


def _open_maybe_gz(path, mode):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode)
    return open(path, mode)


def load_volume(path) -> Volume:
    """Read a NIfTI-1 single-file image (.nii or .nii.gz).

    Raises
    ------
    NiftiError
        If the header is malformed (the message names the offending field)
        or the datatype is unsupported.
    """
    with _open_maybe_gz(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HDR_SIZE:
        raise NiftiError("malformed header: file shorter than 348-byte header")

    sizeof_hdr = struct.unpack("<i", raw[0:4])[0]
    if sizeof_hdr == _HDR_SIZE:
        end = "<"
    elif struct.unpack(">i", raw[0:4])[0] == _HDR_SIZE:
        end = ">"
    else:
        raise NiftiError(f"malformed header: sizeof_hdr = {sizeof_hdr}, expected 348")

    magic = raw[344:348]
    if magic not in (b"n+1\0", b"ni1\0"):
        raise NiftiError(f"malformed header: magic = {magic!r}")
    if magic == b"ni1\0":
        raise NiftiError("malformed header: magic 'ni1' (two-file NIfTI unsupported)")

    dim = struct.unpack(end + "8h", raw[40:56])
    ndim = dim[0]
    if ndim < 3 or ndim > 7:
        raise NiftiError(f"malformed header: dim[0] = {ndim}")
    if any(d > 1 for d in dim[4 : ndim + 1]):
        raise NiftiError(f"malformed header: dim — only 3D volumes supported, got {dim[: ndim + 1]}")
    shape = dim[1:4]
    if any(d < 1 for d in shape):
        raise NiftiError(f"malformed header: dim = {shape}")

    datatype, bitpix = struct.unpack(end + "hh", raw[70:74])
    if datatype not in _DTYPES:
        raise NiftiError(f"unsupported datatype code {datatype}")
    dtype = np.dtype(_DTYPES[datatype]).newbyteorder(end)
    if bitpix != dtype.itemsize * 8:
        raise NiftiError(f"malformed header: bitpix = {bitpix} inconsistent with datatype {datatype}")

    pixdim = struct.unpack(end + "8f", raw[76:108])
    voxel_size = np.abs(np.array(pixdim[1:4], dtype=float))
    if np.any(voxel_size <= 0) or not np.all(np.isfinite(voxel_size)):
        raise NiftiError(f"malformed header: pixdim = {pixdim[1:4]}")

    vox_offset = struct.unpack(end + "f", raw[108:112])[0]
    scl_slope, scl_inter = struct.unpack(end + "ff", raw[112:120])
    qform_code, sform_code = struct.unpack(end + "hh", raw[252:256])
    quatern = struct.unpack(end + "6f", raw[256:280])
    srow = np.array(struct.unpack(end + "12f", raw[280:328]), dtype=float).reshape(3, 4)

    if sform_code > 0:
        affine = np.vstack([srow, [0.0, 0.0, 0.0, 1.0]])
    elif qform_code > 0:
        affine = _qform_affine(quatern, pixdim)
    else:
        affine = np.diag([voxel_size[0], voxel_size[1], voxel_size[2], 1.0])
    if abs(np.linalg.det(affine[:3, :3])) < 1e-12:
        raise NiftiError("singular affine")

    offset = int(vox_offset) if vox_offset >= _HDR_SIZE else _HDR_SIZE + 4
    n = int(np.prod(shape))
    nbytes = n * dtype.itemsize
    if len(raw) < offset + nbytes:
        raise NiftiError("malformed header: vox_offset/dim exceed file size")
    data = np.frombuffer(raw[offset : offset + nbytes], dtype=dtype)
    data = data.reshape(shape, order="F")
    data = data.astype(dtype.newbyteorder("="), copy=True)

    if scl_slope not in (0.0, 1.0) or scl_inter != 0.0:
        data = data.astype(np.float64) * scl_slope + scl_inter

    return Volume(data, voxel_size, affine)


def _qform_affine(quatern, pixdim):
    b, c, d, qx, qy, qz = quatern
    a2 = 1.0 - (b * b + c * c + d * d)
    a = np.sqrt(max(a2, 0.0))
    R = np.array(
        [
            [a * a + b * b - c * c - d * d, 2 * b * c - 2 * a * d, 2 * b * d + 2 * a * c],
            [2 * b * c + 2 * a * d, a * a + c * c - b * b - d * d, 2 * c * d - 2 * a * b],
            [2 * b * d - 2 * a * c, 2 * c * d + 2 * a * b, a * a + d * d - c * c - b * b],
        ]
    )
    qfac = -1.0 if pixdim[0] == -1.0 else 1.0
    S = np.diag([abs(pixdim[1]), abs(pixdim[2]), qfac * abs(pixdim[3])])
    affine = np.eye(4)
    affine[:3, :3] = R @ S
    affine[:3, 3] = (qx, qy, qz)
    return affine


def save_volume(vol: Volume, path) -> None:
    """Write a NIfTI-1 single-file image; the affine goes into the sform."""
    dtype = vol.data.dtype.newbyteorder("=")
    if dtype not in _DTYPE_CODES:
        raise NiftiError(f"unsupported datatype {dtype} for writing")
    code = _DTYPE_CODES[dtype]

    hdr = bytearray(_HDR_SIZE)
    struct.pack_into("<i", hdr, 0, _HDR_SIZE)
    dim = (3,) + tuple(vol.dims) + (1, 1, 1, 1)
    struct.pack_into("<8h", hdr, 40, *dim)
    struct.pack_into("<hh", hdr, 70, code, dtype.itemsize * 8)
    pixdim = (1.0,) + tuple(float(v) for v in vol.voxel_size) + (0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<8f", hdr, 76, *pixdim)
    struct.pack_into("<f", hdr, 108, 352.0)  # vox_offset
    struct.pack_into("<ff", hdr, 112, 1.0, 0.0)  # scl_slope, scl_inter
    struct.pack_into("<hh", hdr, 252, 0, 1)  # qform_code, sform_code
    struct.pack_into("<12f", hdr, 280, *vol.affine[:3, :4].ravel())
    struct.pack_into("<4s", hdr, 344, b"n+1\0")

    payload = np.asfortranarray(vol.data.astype(dtype, copy=False)).tobytes(order="F")
    with _open_maybe_gz(path, "wb") as f:
        f.write(bytes(hdr))
        f.write(b"\0\0\0\0")  # extension flag
        f.write(payload)
