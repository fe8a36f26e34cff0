"""Persistent refinement tree with red quadrisection and green closure.

Tree nodes are red triangles: roots are the base mesh cells and a refined
node owns four children built from its edge midpoints. Children persist
after coarsening and are reactivated on re-refinement, so vertex ids stay
stable. The active (conforming) mesh is extracted from the leaves; a leaf
with exactly one hanging edge is bisected towards the opposite vertex.
Green halves are not tree nodes and are regenerated on every extraction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MeshError
from .mesh import Bathymetry, TriMesh, bathymetry_from_vertex_values

KEY_BASE = np.int64(1) << 31
RED = 0


def green_code(k: int, half: int) -> int:
    return 1 + 2 * k + half


@dataclass
class ActiveMesh:
    """Conforming active mesh plus its link to the tree."""
    mesh: TriMesh
    bathy: Bathymetry
    owner: np.ndarray        # tree leaf owning each cell
    code: np.ndarray         # 0 red, 1..6 green half (edge k, half h) -> 1 + 2k + h
    vids: np.ndarray         # global vertex id of each local vertex
    tree_level: np.ndarray   # refinement level of the owner

    @property
    def keys(self):
        return self.owner * 8 + self.code


class _Grow:
    """Append-only numpy storage."""

    def __init__(self, shape_tail, dtype, fill=0):
        self.a = np.full((64,) + shape_tail, fill, dtype=dtype)
        self.n = 0
        self.fill = fill

    def extend(self, rows):
        rows = np.asarray(rows, dtype=self.a.dtype)
        m = len(rows)
        if self.n + m > len(self.a):
            cap = max(2 * len(self.a), self.n + m)
            b = np.full((cap,) + self.a.shape[1:], self.fill, dtype=self.a.dtype)
            b[:self.n] = self.a[:self.n]
            self.a = b
        self.a[self.n:self.n + m] = rows
        self.n += m
        return np.arange(self.n - m, self.n)

    @property
    def view(self):
        return self.a[:self.n]


class MeshHierarchy:
    """Refinement tree over a base triangulation."""

    def __init__(self, base: TriMesh, bathymetry_fn, max_level: int):
        if max_level < 0:
            raise MeshError("max_level must be >= 0")
        self.max_level = int(max_level)
        self.bfn = bathymetry_fn
        self.V = _Grow((2,), np.float64)
        self.V.extend(base.vertices)
        self.Bv = _Grow((), np.float64)
        self.Bv.extend(self._sample(base.vertices))
        nb = base.n_cells
        self.tri = _Grow((3,), np.int64)
        self.tri.extend(base.cells)
        self.parent = _Grow((), np.int64, -1)
        self.parent.extend(np.full(nb, -1))
        self.child = _Grow((), np.int64, -1)
        self.child.extend(np.full(nb, -1))
        self.level = _Grow((), np.int64)
        self.level.extend(np.zeros(nb))
        self.refined = _Grow((), np.bool_, False)
        self.refined.extend(np.zeros(nb, dtype=bool))
        self.roots = np.arange(nb, dtype=np.int64)
        self.mid = {}
        self._mid_sorted = None
        self.ignored_flags = 0

    def _sample(self, pts):
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        b = np.asarray(self.bfn(pts[:, 0], pts[:, 1]), dtype=np.float64)
        return np.broadcast_to(b, (len(pts),)).copy()

    # -- midpoints -----------------------------------------------------------------

    def midpoint(self, a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        m = self.mid.get(key)
        if m is None:
            V = self.V.view
            p = 0.5 * (V[a] + V[b])
            m = int(self.V.extend(p[None, :])[0])
            self.Bv.extend(self._sample(p))
            self.mid[key] = m
            self._mid_sorted = None
        return m

    def lookup_midpoints(self, a, b):
        """Vectorized registry lookup; -1 where no midpoint exists."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self._mid_sorted is None:
            if self.mid:
                ks = np.array([lo * KEY_BASE + hi for lo, hi in self.mid.keys()], dtype=np.int64)
                vs = np.fromiter(self.mid.values(), dtype=np.int64, count=len(self.mid))
                order = np.argsort(ks)
                self._mid_sorted = (ks[order], vs[order])
            else:
                self._mid_sorted = (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
        ks, vs = self._mid_sorted
        key = np.minimum(a, b) * KEY_BASE + np.maximum(a, b)
        if len(ks) == 0:
            return np.full(key.shape, -1, dtype=np.int64)
        pos = np.minimum(np.searchsorted(ks, key), len(ks) - 1)
        return np.where(ks[pos] == key, vs[pos], -1)

    # -- tree edits ----------------------------------------------------------------

    def leaves(self):
        front = self.roots
        out = []
        ref = self.refined.a
        ch = self.child.a
        while len(front):
            r = ref[front]
            out.append(front[~r])
            front = (ch[front[r]][:, None] + np.arange(4)).ravel()
        return np.sort(np.concatenate(out))

    def refine(self, nodes):
        """Quadrisect leaves (children are created once and reused)."""
        count = 0
        for n in np.asarray(nodes, dtype=np.int64):
            if self.refined.a[n]:
                continue
            if self.level.a[n] >= self.max_level:
                self.ignored_flags += 1
                continue
            if self.child.a[n] < 0:
                a, b, c = (int(x) for x in self.tri.a[n])
                mab = self.midpoint(a, b)
                mbc = self.midpoint(b, c)
                mca = self.midpoint(c, a)
                ids = self.tri.extend([(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)])
                self.parent.extend(np.full(4, n))
                self.child.extend(np.full(4, -1))
                self.level.extend(np.full(4, self.level.a[n] + 1))
                self.refined.extend(np.zeros(4, dtype=bool))
                self.child.a[n] = ids[0]
            self.refined.a[n] = True
            count += 1
        return count

    def coarsen(self, parents):
        """Deactivate the children of ``parents`` whose children are all leaves."""
        count = 0
        for p in np.asarray(parents, dtype=np.int64):
            c0 = self.child.a[p]
            if not self.refined.a[p] or c0 < 0 or self.refined.a[c0:c0 + 4].any():
                continue
            self.refined.a[p] = False
            count += 1
        return count

    def children(self, n):
        c0 = self.child.a[n]
        return np.arange(c0, c0 + 4) if c0 >= 0 else np.zeros(0, dtype=np.int64)

    def ancestors(self, n):
        out = []
        p = self.parent.a[n]
        while p >= 0:
            out.append(int(p))
            p = self.parent.a[p]
        return out

    # -- closure and extraction -------------------------------------------------------

    def _hanging(self, leaves):
        tri = self.tri.a[leaves]
        act = np.zeros(self.V.n, dtype=bool)
        act[tri.ravel()] = True
        p = tri[:, [1, 2, 0]]
        q = tri[:, [2, 0, 1]]
        m = self.lookup_midpoints(p, q)
        hang = (m >= 0) & act[np.maximum(m, 0)]
        mm = np.maximum(m, 0)
        d1 = self.lookup_midpoints(p, mm)
        d2 = self.lookup_midpoints(mm, q)
        deep = hang & (((d1 >= 0) & act[np.maximum(d1, 0)]) | ((d2 >= 0) & act[np.maximum(d2, 0)]))
        return hang, m, deep.any(axis=1)

    def close(self, max_iter: int = 64):
        """Refine leaves until every leaf has at most one hanging edge, one level deep."""
        for _ in range(max_iter):
            leaves = self.leaves()
            hang, _, deep = self._hanging(leaves)
            bad = leaves[(hang.sum(axis=1) >= 2) | deep]
            if len(bad) == 0:
                return
            before = self.ignored_flags
            self.refine(bad)
            if self.ignored_flags > before:
                raise MeshError("closure requires refining past the maximum level")
        raise MeshError("closure did not converge")

    def active(self) -> ActiveMesh:
        self.close()
        leaves = self.leaves()
        hang, m, _ = self._hanging(leaves)
        tri = self.tri.a[leaves]
        nh = hang.sum(axis=1)
        red = nh == 0
        cells = [tri[red]]
        owner = [leaves[red]]
        code = [np.zeros(red.sum(), dtype=np.int64)]
        for k in range(3):
            sel = (nh == 1) & hang[:, k]
            if not sel.any():
                continue
            t = tri[sel]
            mk = m[sel, k]
            vk, vk1, vk2 = t[:, k], t[:, (k + 1) % 3], t[:, (k + 2) % 3]
            cells += [np.column_stack([vk, vk1, mk]), np.column_stack([vk, mk, vk2])]
            owner += [leaves[sel], leaves[sel]]
            code += [np.full(sel.sum(), green_code(k, 0)), np.full(sel.sum(), green_code(k, 1))]
        cells = np.concatenate(cells)
        owner = np.concatenate(owner)
        code = np.concatenate(code)
        order = np.lexsort((code, owner))
        cells, owner, code = cells[order], owner[order], code[order]
        vids, local = np.unique(cells.ravel(), return_inverse=True)
        mesh = TriMesh(self.V.a[vids], local.reshape(-1, 3), orient=False)
        bathy = bathymetry_from_vertex_values(mesh, self.Bv.a[vids])
        return ActiveMesh(mesh, bathy, owner, code, vids, self.level.a[owner].copy())

    @property
    def n_nodes(self):
        return self.tri.n
