"""Unstructured triangular meshes, geometry and piecewise linear bathymetry.

Conventions
-----------
Cells are stored counterclockwise. Edge ``k`` of a cell is the edge opposite
its vertex ``k``, i.e. it joins vertices ``(k+1) % 3`` and ``(k+2) % 3``.
``neighbors[j, k]`` is the cell across edge ``k`` or ``-1`` on the boundary
and ``nbr_edge[j, k]`` is the local index of the same edge inside that
neighbor.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError, InvalidDataError, MeshError

NO_NEIGHBOR = -1


class TriMesh:
    """Conforming triangulation with connectivity and per-cell geometry."""

    def __init__(self, vertices, cells, orient: bool = True):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64).reshape(-1, 2)
        self.cells = np.ascontiguousarray(cells, dtype=np.int64).reshape(-1, 3)
        if self.cells.size and (self.cells.min() < 0 or self.cells.max() >= len(self.vertices)):
            raise MeshError("cell references a vertex index out of range")
        if orient:
            sa = self._signed_area()
            flip = sa < 0
            if np.any(flip):
                self.cells[flip] = self.cells[flip][:, [0, 2, 1]]
        self.build_connectivity()
        compute_geometry(self)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def _signed_area(self):
        p = self.vertices[self.cells]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))

    def build_connectivity(self):
        nc = self.n_cells
        a = self.cells[:, [1, 2, 0]]
        b = self.cells[:, [2, 0, 1]]
        lo = np.minimum(a, b).ravel()
        hi = np.maximum(a, b).ravel()
        key = lo * (self.n_vertices + 1) + hi
        order = np.argsort(key, kind="stable")
        ks = key[order]
        nbr = np.full(nc * 3, NO_NEIGHBOR, dtype=np.int64)
        nbe = np.full(nc * 3, NO_NEIGHBOR, dtype=np.int64)
        if len(ks) > 2 and np.any(ks[2:] == ks[:-2]):
            bad = ks[2:][ks[2:] == ks[:-2]][0]
            raise MeshError(f"edge ({bad // (self.n_vertices + 1)}, {bad % (self.n_vertices + 1)}) "
                            "is shared by more than two cells")
        same = np.nonzero(ks[1:] == ks[:-1])[0]
        i0 = order[same]
        i1 = order[same + 1]
        nbr[i0] = i1 // 3
        nbr[i1] = i0 // 3
        nbe[i0] = i1 % 3
        nbe[i1] = i0 % 3
        self.neighbors = nbr.reshape(nc, 3)
        self.nbr_edge = nbe.reshape(nc, 3)
        # vertex -> incident cells (CSR)
        flat = self.cells.ravel()
        order = np.argsort(flat, kind="stable")
        self.vc_idx = (order // 3).astype(np.int64)
        counts = np.bincount(flat, minlength=self.n_vertices)
        self.vc_ptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.cumsum(counts, out=self.vc_ptr[1:])

    def vertex_cells(self, i: int) -> np.ndarray:
        return self.vc_idx[self.vc_ptr[i]:self.vc_ptr[i + 1]]

    def boundary_edges(self):
        j, k = np.nonzero(self.neighbors < 0)
        return j, k

    def vertex_stencil(self, j: int) -> np.ndarray:
        """Cells sharing at least one vertex with cell ``j`` (``j`` included)."""
        return np.unique(np.concatenate([self.vertex_cells(v) for v in self.cells[j]]))

    def locate(self, pts) -> np.ndarray:
        """Index of a cell containing each point (brute force, -1 if outside)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        from scipy.spatial import cKDTree
        tree = cKDTree(self.bary)
        k = min(16, self.n_cells)
        _, cand = tree.query(pts, k=k)
        cand = cand.reshape(len(pts), k)
        out = np.full(len(pts), -1, dtype=np.int64)
        for i, p in enumerate(pts):
            for c in cand[i]:
                if point_in_triangle(p, self.vertices[self.cells[c]]):
                    out[i] = c
                    break
        return out


def point_in_triangle(p, tri, tol=1e-12) -> bool:
    a, b, c = tri
    d = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
    l1 = ((b[0] - p[0]) * (c[1] - p[1]) - (c[0] - p[0]) * (b[1] - p[1])) / d
    l2 = ((c[0] - p[0]) * (a[1] - p[1]) - (a[0] - p[0]) * (c[1] - p[1])) / d
    return l1 >= -tol and l2 >= -tol and 1.0 - l1 - l2 >= -tol


def compute_geometry(mesh: TriMesh) -> TriMesh:
    """Populate areas, barycenters, edge data, altitudes and gradient weights."""
    p = mesh.vertices[mesh.cells]                        # (nc,3,2)
    area = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    bad = np.nonzero(~(area > 0))[0]
    if len(bad):
        raise MeshError(f"degenerate triangle: cell {int(bad[0])} has area {area[bad[0]]!r}")
    mesh.area = area
    mesh.bary = p.mean(axis=1)
    pa = p[:, [1, 2, 0], :]
    pb = p[:, [2, 0, 1], :]
    e = pb - pa
    ln = np.sqrt(e[..., 0] ** 2 + e[..., 1] ** 2)
    mesh.edge_len = ln
    mesh.normals = np.stack([e[..., 1] / ln, -e[..., 0] / ln], axis=-1)
    mesh.midpoints = 0.5 * (pa + pb)
    mesh.altitudes = 2.0 * area[:, None] / ln
    mesh.mid_off = mesh.midpoints - mesh.bary[:, None, :]
    mesh.vert_off = p - mesh.bary[:, None, :]
    mesh.min_alt = mesh.altitudes.min(axis=1)

    # hat function gradients: grad of the P1 basis attached to local vertex k
    d2 = 2.0 * area
    mesh.hat_grad = np.stack([(pa[..., 1] - pb[..., 1]) / d2[:, None],
                              (pb[..., 0] - pa[..., 0]) / d2[:, None]], axis=-1)

    # neighbor points for gradient fits: barycenters, or barycenters mirrored
    # across the boundary edge for ghost cells
    nb = mesh.neighbors
    pts = np.where((nb >= 0)[..., None], mesh.bary[np.maximum(nb, 0)], 0.0)
    dist = np.einsum("jkd,jkd->jk", mesh.mid_off, mesh.normals)
    ghost = mesh.bary[:, None, :] + 2.0 * dist[..., None] * mesh.normals
    pts = np.where((nb >= 0)[..., None], pts, ghost)
    mesh.nbr_off = pts - mesh.bary[:, None, :]
    mesh.lsq_w, mesh.lsq_singular = lsq_gradient_weights(mesh.nbr_off)
    for name in ("edge_len", "normals", "midpoints", "altitudes", "mid_off", "vert_off",
                 "hat_grad", "nbr_off", "bary", "area"):
        setattr(mesh, name, np.ascontiguousarray(getattr(mesh, name)))
    return mesh


def lsq_gradient_weights(d):
    """Least-squares plane weights W (nc,2,3): grad = sum_k W[:, :, k] * dY_k."""
    a11 = np.einsum("jk,jk->j", d[..., 0], d[..., 0])
    a12 = np.einsum("jk,jk->j", d[..., 0], d[..., 1])
    a22 = np.einsum("jk,jk->j", d[..., 1], d[..., 1])
    det = a11 * a22 - a12 * a12
    scale = np.maximum(a11 * a22, 1e-300)
    singular = np.abs(det) <= 1e-12 * scale
    inv = np.where(singular, 0.0, 1.0 / np.where(singular, 1.0, det))
    w = np.empty((len(d), 2, 3))
    w[:, 0, :] = (a22[:, None] * d[..., 0] - a12[:, None] * d[..., 1]) * inv[:, None]
    w[:, 1, :] = (a11[:, None] * d[..., 1] - a12[:, None] * d[..., 0]) * inv[:, None]
    return np.ascontiguousarray(w), singular


def build_uniform(nx: int, ny: int, domain=(0.0, 1.0, 0.0, 1.0)) -> TriMesh:
    """2*nx*ny right triangles, each rectangle split along its lower-left to upper-right diagonal.

    Cell ``2*(j*nx + i)`` is the lower-right triangle of rectangle (i, j) and
    ``2*(j*nx + i) + 1`` the upper-left one.
    """
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise InvalidArgumentError(f"mesh counts must be positive integers, got nx={nx}, ny={ny}")
    x0, x1, y0, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise InvalidArgumentError(f"degenerate domain {domain}")
    nx, ny = int(nx), int(ny)
    xs = x0 + (x1 - x0) * np.arange(nx + 1) / nx
    ys = y0 + (y1 - y0) * np.arange(ny + 1) / ny
    X, Y = np.meshgrid(xs, ys)
    verts = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i = i.ravel()
    j = j.ravel()
    a = j * (nx + 1) + i
    b = a + 1
    c = a + nx + 2
    d = a + nx + 1
    cells = np.empty((2 * nx * ny, 3), dtype=np.int64)
    cells[0::2] = np.column_stack([a, b, c])
    cells[1::2] = np.column_stack([a, c, d])
    mesh = TriMesh(verts, cells, orient=False)
    mesh.uniform = (nx, ny, (x0, x1, y0, y1))
    return mesh


def locate_uniform(uniform, pts) -> np.ndarray:
    """Cell index of points in a mesh produced by :func:`build_uniform`."""
    nx, ny, (x0, x1, y0, y1) = uniform
    pts = np.asarray(pts, dtype=np.float64)
    sx = (pts[:, 0] - x0) / (x1 - x0) * nx
    sy = (pts[:, 1] - y0) / (y1 - y0) * ny
    i = np.clip(np.floor(sx).astype(np.int64), 0, nx - 1)
    j = np.clip(np.floor(sy).astype(np.int64), 0, ny - 1)
    upper = (sy - j) > (sx - i)
    return 2 * (j * nx + i) + upper.astype(np.int64)


@dataclass
class Bathymetry:
    """Continuous piecewise linear bottom B~ sampled at mesh vertices."""
    vertex: np.ndarray      # (nv,)   B(V)
    cell_vertex: np.ndarray  # (nc,3)  vertex values per cell
    center: np.ndarray      # (nc,)   mean of the three vertex values
    midpoint: np.ndarray    # (nc,3)  B~ at edge midpoints
    grad: np.ndarray        # (nc,2)  plane slope per cell

    def evaluate(self, mesh: TriMesh, j: int, pt) -> float:
        """B~ at a point inside cell ``j``."""
        return float(self.center[j] + self.grad[j] @ (np.asarray(pt) - mesh.bary[j]))


def bathymetry_from_vertex_values(mesh: TriMesh, bv) -> Bathymetry:
    bv = np.asarray(bv, dtype=np.float64)
    cv = bv[mesh.cells]
    center = (cv[:, 0] + cv[:, 1] + cv[:, 2]) / 3.0
    mid = np.empty_like(cv)
    for k in range(3):
        # same operand order for both sides of an edge is not required:
        # a + b == b + a exactly in IEEE arithmetic
        mid[:, k] = 0.5 * (cv[:, (k + 1) % 3] + cv[:, (k + 2) % 3])
    grad = np.einsum("jkd,jk->jd", mesh.hat_grad, cv)
    return Bathymetry(bv, np.ascontiguousarray(cv), center, np.ascontiguousarray(mid), grad)


def sample_bathymetry(B: Callable, mesh: TriMesh) -> Bathymetry:
    """Sample a bottom function at the vertices and build its linear interpolant."""
    x = mesh.vertices[:, 0]
    y = mesh.vertices[:, 1]
    bv = np.asarray(B(x, y), dtype=np.float64)
    if bv.shape == ():
        bv = np.full(mesh.n_vertices, float(bv))
    bad = np.nonzero(~np.isfinite(bv))[0]
    if len(bad):
        raise InvalidDataError(f"non-finite bathymetry at vertex {int(bad[0])}")
    return bathymetry_from_vertex_values(mesh, bv)


# -- plain-text dump ---------------------------------------------------------

def dump_mesh(mesh: TriMesh, path) -> None:
    """Write ``vertices N`` then N ``x y`` lines, ``cells M`` then M ``a b c`` lines."""
    with open(path, "w") as fh:
        fh.write("# swvd mesh v1\n")
        fh.write(f"vertices {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        fh.write(f"cells {mesh.n_cells}\n")
        for a, b, c in mesh.cells:
            fh.write(f"{a} {b} {c}\n")


def load_mesh(path) -> TriMesh:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    try:
        tag, n = lines[0].split()
        if tag != "vertices":
            raise ValueError(tag)
        nv = int(n)
        verts = np.array([[float(t) for t in ln.split()] for ln in lines[1:1 + nv]])
        tag, n = lines[1 + nv].split()
        if tag != "cells":
            raise ValueError(tag)
        nc = int(n)
        cells = np.array([[int(t) for t in ln.split()] for ln in lines[2 + nv:2 + nv + nc]],
                         dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise MeshError(f"malformed mesh file {path}: {exc}") from exc
    if len(verts) != nv or len(cells) != nc:
        raise MeshError(f"malformed mesh file {path}: truncated")
    return TriMesh(verts.reshape(-1, 2), cells.reshape(-1, 3))
