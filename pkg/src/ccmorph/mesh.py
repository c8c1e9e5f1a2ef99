"""Planar triangle meshes: validation, areas, boundary loops, OFF export."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TriMesh2D"]


@dataclass(frozen=True)
class TriMesh2D:
    """A planar triangle mesh.

    vertices : (V, 2) float mm coordinates
    triangles : (T, 3) int vertex indices, counter-clockwise
    boundary_flags : (V,) bool, True for vertices on the mesh boundary
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_flags: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        t = np.asarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("vertices must be (V, 2)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError("triangles must be (T, 3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")
        b = np.asarray(self.boundary_flags, dtype=bool).reshape(len(v))
        v, t, b = v.view(), t.view(), b.view()
        for arr in (v, t, b):
            arr.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "boundary_flags", b)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> tuple:
        """Vertex coordinate arrays (a, b, c) per triangle, each (T, 2)."""
        v, t = self.vertices, self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def signed_areas(self) -> np.ndarray:
        a, b, c = self.corners()
        e1 = b - a
        e2 = c - a
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def area(self) -> float:
        return float(self.signed_areas().sum())

    def centroids(self) -> np.ndarray:
        a, b, c = self.corners()
        return (a + b + c) / 3.0

    def angles(self) -> np.ndarray:
        """Interior angles per triangle in radians, shape (T, 3)."""
        a, b, c = self.corners()
        out = np.empty((self.n_triangles, 3))
        for k, (p, q, r) in enumerate(((a, b, c), (b, c, a), (c, a, b))):
            u = q - p
            w = r - p
            cross = u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0]
            out[:, k] = np.arctan2(np.abs(cross), (u * w).sum(axis=1))
        return out

    def edges(self) -> np.ndarray:
        """Unique undirected edges, shape (E, 2), sorted pairs."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def boundary_edges(self) -> np.ndarray:
        """Directed boundary edges (u, v) with the interior to the left."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        key = np.sort(e, axis=1)
        _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        return e[counts[inv] == 1]

    def boundary_loop(self) -> np.ndarray:
        """The ordered boundary vertex loop (single loop required)."""
        be = self.boundary_edges()
        nxt = {}
        for u, v in be:
            if u in nxt:
                raise ValueError("mesh boundary is not a single simple loop")
            nxt[int(u)] = int(v)
        start = int(be[0, 0])
        loop = [start]
        cur = nxt[start]
        while cur != start:
            loop.append(cur)
            cur = nxt[cur]
            if len(loop) > len(be):
                raise ValueError("mesh boundary is not a single simple loop")
        if len(loop) != len(be):
            raise ValueError("mesh has more than one boundary loop")
        return np.array(loop, dtype=np.int64)

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges()) + self.n_triangles

    def to_off(self) -> str:
        lines = ["OFF", f"{self.n_vertices} {self.n_triangles} 0"]
        lines += [f"{float(x)!r} {float(y)!r} 0.0" for x, y in self.vertices]
        lines += [f"3 {a} {b} {c}" for a, b, c in self.triangles]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_off(cls, text: str) -> "TriMesh2D":
        tok = text.split()
        if tok[0] != "OFF":
            raise ValueError("not an OFF file")
        nv, nt = int(tok[1]), int(tok[2])
        pos = 4
        verts = np.array(tok[pos : pos + 3 * nv], dtype=float).reshape(nv, 3)[:, :2]
        pos += 3 * nv
        tris = []
        for _ in range(nt):
            k = int(tok[pos])
            tris.append([int(x) for x in tok[pos + 1 : pos + 1 + k]])
            pos += 1 + k
        tris = np.array(tris, dtype=np.int64)
        mesh = cls(verts, tris, np.zeros(nv, dtype=bool))
        flags = np.zeros(nv, dtype=bool)
        flags[np.unique(mesh.boundary_edges())] = True
        return cls(verts, tris, flags)
