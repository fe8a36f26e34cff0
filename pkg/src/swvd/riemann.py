"""Edge traces of mixed cells from 1-D Riemann problems in the edge frame.

For a mixed cell the piecewise linear traces are replaced, edge by edge, by
the solution of a Riemann problem between the two nearest single-fluid
cells on either side of the edge line. The internal solver is an HLLC-type
two-wave solver with a middle contact (mass variable h, pressure
p = g rho h^2 / (2 rho0)), whose contact speed includes the bed-step
momentum balance so that both lake-at-rest types pass through unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import InterfaceTooWideError
from .mesh import TriMesh

SEARCH_DIAMETERS = 5.0
BAND_RINGS = 6


@dataclass
class RotatedState:
    w: np.ndarray
    u: np.ndarray      # normal velocity u'
    v: np.ndarray      # tangential velocity v'
    rho: np.ndarray
    B: np.ndarray

    @property
    def h(self):
        return np.maximum(self.w - self.B, 0.0)


@dataclass
class IntermediatePair:
    left: RotatedState
    right: RotatedState
    s_star: np.ndarray
    s_left: np.ndarray
    s_right: np.ndarray
    vacuum: np.ndarray      # bool, solver could not produce a valid star region


def rotate_in(u, v, cos, sin):
    return u * cos + v * sin, -u * sin + v * cos


def rotate_out(up, vp, cos, sin):
    return up * cos - vp * sin, up * sin + vp * cos


def to_rotated(prim, B, cos, sin) -> RotatedState:
    """prim columns (w, u, v, rho) -> rotated state."""
    up, vp = rotate_in(prim[..., 1], prim[..., 2], cos, sin)
    return RotatedState(prim[..., 0], up, vp, prim[..., 3], np.asarray(B, dtype=np.float64))


def riemann_intermediates(left: RotatedState, right: RotatedState, g: float, rho0: float,
                          ) -> IntermediatePair:
    gr = g / rho0
    hL, hR = left.h, right.h
    uL, uR = left.u, right.u
    cL = np.sqrt(gr * hL * left.rho)
    cR = np.sqrt(gr * hR * right.rho)
    sL = np.minimum(uL - cL, uR - cR)
    sR = np.maximum(uL + cL, uR + cR)
    pL = 0.5 * gr * left.rho * hL * hL
    pR = 0.5 * gr * right.rho * hR * hR
    bed = gr * 0.25 * (left.rho + right.rho) * (hL + hR) * (right.B - left.B)
    num = pR - pL + bed + hL * uL * (sL - uL) - hR * uR * (sR - uR)
    den = hL * (sL - uL) - hR * (sR - uR)
    ok = den < 0.0
    s_star = np.where(ok, num / np.where(ok, den, -1.0), 0.5 * (uL + uR))
    ok &= (s_star > sL) & (s_star < sR)
    dl = np.where(ok, sL - s_star, -1.0)
    dr = np.where(ok, sR - s_star, 1.0)
    hsL = np.where(ok, hL * (sL - uL) / dl, 0.0)
    hsR = np.where(ok, hR * (sR - uR) / dr, 0.0)
    ok &= (hsL >= 0.0) & (hsR >= 0.0)
    hsL = np.where(ok, hsL, 0.0)
    hsR = np.where(ok, hsR, 0.0)
    starL = RotatedState(hsL + left.B, s_star.copy(), left.v.copy(), left.rho.copy(), left.B)
    starR = RotatedState(hsR + right.B, s_star.copy(), right.v.copy(), right.rho.copy(), right.B)
    return IntermediatePair(starL, starR, s_star, sL, sR, ~ok)


def select_right(pair: IntermediatePair, right: RotatedState, g: float, rho0: float):
    """Selection rule: right intermediate if wet, positive density and u*' - c* < 0."""
    st = pair.right
    hs = np.maximum(st.w - st.B, 0.0)
    cs = np.sqrt(g / rho0 * hs * np.maximum(st.rho, 0.0))
    use = (~pair.vacuum) & (hs > 0.0) & (st.rho > 0.0) & (st.u - cs < 0.0)
    out = np.empty(np.shape(right.w) + (4,))
    out[..., 0] = np.where(use, st.w, right.w)
    out[..., 1] = np.where(use, st.u, right.u)
    out[..., 2] = np.where(use, st.v, right.v)
    out[..., 3] = np.where(use, st.rho, right.rho)
    return out, use


def sample_origin(pair: IntermediatePair, left: RotatedState, right: RotatedState):
    """Riemann fan sampled at x' = 0 (used on edges between two mixed cells)."""
    out = np.empty(np.shape(left.w) + (4,))
    sel = np.where(pair.s_left >= 0.0, 0, np.where(pair.s_star >= 0.0, 1, np.where(pair.s_right > 0.0, 2, 3)))
    up = np.where(pair.vacuum, np.where(0.5 * (left.u + right.u) >= 0.0, 0, 3), sel)
    states = [left, pair.left, pair.right, right]
    for i, name in enumerate(("w", "u", "v", "rho")):
        stack = np.stack([getattr(s, name) for s in states], axis=-1)
        out[..., i] = np.take_along_axis(stack, up[..., None], axis=-1)[..., 0]
    return out


def mixed_edge_trace(pair: IntermediatePair, right: RotatedState, cos, sin, g, rho0):
    """Cartesian (w, u, v, rho) trace for a mixed cell edge."""
    rot, _ = select_right(pair, right, g, rho0)
    u, v = rotate_out(rot[..., 1], rot[..., 2], cos, sin)
    rot[..., 1] = u
    rot[..., 2] = v
    return rot


# -- flanking cells ----------------------------------------------------------

def _band(mesh: TriMesh, seeds: np.ndarray, rings: int) -> np.ndarray:
    mark = np.zeros(mesh.n_cells, dtype=bool)
    mark[seeds] = True
    front = seeds
    for _ in range(rings):
        nb = mesh.neighbors[front].ravel()
        nb = nb[nb >= 0]
        nb = np.unique(nb[~mark[nb]])
        if len(nb) == 0:
            break
        mark[nb] = True
        front = nb
    return np.nonzero(mark)[0]


class _SingleFinder:
    """Nearest single-fluid cell on a prescribed side of a line."""

    def __init__(self, mesh: TriMesh, mixed: np.ndarray):
        self.mesh = mesh
        seeds = np.nonzero(mixed)[0]
        band = _band(mesh, seeds, BAND_RINGS)
        cand = band[~mixed[band]]
        if len(cand) == 0:
            cand = np.nonzero(~mixed)[0]
        self.cand = cand
        self.tree = cKDTree(mesh.bary[cand]) if len(cand) else None

    def query(self, pts, normals, side, radius):
        """For each point the nearest candidate with side*(x - p).n > 0."""
        q = len(pts)
        out = np.full(q, -1, dtype=np.int64)
        if q == 0 or self.tree is None:
            return out
        todo = np.arange(q)
        k = 16
        while len(todo):
            kk = min(k, len(self.cand))
            dist, idx = self.tree.query(pts[todo], k=kk)
            dist = dist.reshape(len(todo), kk)
            idx = idx.reshape(len(todo), kk)
            cells = self.cand[idx]
            rel = self.mesh.bary[cells] - pts[todo][:, None, :]
            s = side[todo, None] * np.einsum("qkd,qd->qk", rel, normals[todo])
            good = (s > 0.0) & (dist <= radius[todo, None])
            has = good.any(axis=1)
            first = np.argmax(good, axis=1)
            out[todo[has]] = cells[has, first[has]]
            far = dist[:, -1] > radius[todo]
            todo = todo[~has & ~far]
            if kk == len(self.cand):
                break
            k *= 4
        return out


def find_flanking_singles(mesh: TriMesh, mixed, j: int, k: int):
    """(T_L, T_R) for edge k of the mixed cell j; T_R is on the side n_jk points to."""
    mixed = np.asarray(mixed, dtype=bool)
    finder = _SingleFinder(mesh, mixed)
    M = mesh.midpoints[j, k][None, :]
    n = mesh.normals[j, k][None, :]
    rad = np.array([SEARCH_DIAMETERS * mesh.edge_len[j].max()])
    nb = mesh.neighbors[j, k]
    tl = finder.query(M, n, np.array([-1.0]), rad)[0]
    if nb >= 0 and not mixed[nb]:
        tr = nb
    else:
        tr = finder.query(M, n, np.array([1.0]), rad)[0]
    if tl < 0 or (tr < 0 and nb >= 0):
        raise InterfaceTooWideError(f"no single-fluid cell within {SEARCH_DIAMETERS} diameters "
                                    f"of cell {j} edge {k}")
    return int(tl), int(tr)


class MixedTraces:
    """Precomputed flanking cells of all mixed-cell edges for one classification."""

    def __init__(self, mesh: TriMesh, mixed):
        self.mesh = mesh
        mixed = np.asarray(mixed, dtype=bool)
        self.mixed = mixed
        mj = np.nonzero(mixed)[0]
        self.count = len(mj)
        if len(mj) == 0:
            return
        finder = _SingleFinder(mesh, mixed)
        jj = np.repeat(mj, 3)
        kk = np.tile(np.arange(3), len(mj))
        nb = mesh.neighbors[jj, kk]
        ne = mesh.nbr_edge[jj, kk]
        M = mesh.midpoints[jj, kk]
        n = mesh.normals[jj, kk]
        rad = SEARCH_DIAMETERS * mesh.edge_len[jj].max(axis=1)
        bnd = nb < 0
        nb_single = (nb >= 0) & ~mixed[np.maximum(nb, 0)]
        both = (nb >= 0) & mixed[np.maximum(nb, 0)]
        # each mixed/mixed edge is handled once, from the lower cell index
        both_lo = both & (jj < nb)
        tl = finder.query(M, n, -np.ones(len(jj)), rad)
        need_r = both_lo
        tr = np.full(len(jj), -1, dtype=np.int64)
        tr[nb_single] = nb[nb_single]
        if need_r.any():
            tr[need_r] = finder.query(M[need_r], n[need_r], np.ones(need_r.sum()), rad[need_r])
        bad = (tl < 0) & ~(both & ~both_lo)
        bad |= need_r & (tr < 0)
        if bad.any():
            i = np.nonzero(bad)[0][0]
            raise InterfaceTooWideError(
                f"no single-fluid cell within {SEARCH_DIAMETERS:g} diameters of mixed cell "
                f"{jj[i]} edge {kk[i]}")
        self.s_j, self.s_k, self.s_L, self.s_R = jj[nb_single], kk[nb_single], tl[nb_single], tr[nb_single]
        self.m_j, self.m_k = jj[both_lo], kk[both_lo]
        self.m_nb, self.m_ke = nb[both_lo], ne[both_lo]
        self.m_L, self.m_R = tl[both_lo], tr[both_lo]
        self.b_j, self.b_k, self.b_S = jj[bnd], kk[bnd], tl[bnd]

    def flanking(self):
        """Dict (j, k) -> (T_L, T_R) for inspection and tests."""
        out = {}
        if self.count == 0:
            return out
        for j, k, l, r in zip(self.s_j, self.s_k, self.s_L, self.s_R):
            out[(int(j), int(k))] = (int(l), int(r))
        for j, k, l, r in zip(self.m_j, self.m_k, self.m_L, self.m_R):
            out[(int(j), int(k))] = (int(l), int(r))
        for j, k, s in zip(self.b_j, self.b_k, self.b_S):
            out[(int(j), int(k))] = (int(s), int(s))
        return out

    def apply(self, P, Bc, T, g, rho0):
        """Overwrite flow traces (columns 0..3) of mixed cells in T (nc,3,6)."""
        if self.count == 0:
            return 0
        mesh = self.mesh
        if len(self.s_j):
            j, k = self.s_j, self.s_k
            cs, sn = mesh.normals[j, k, 0], mesh.normals[j, k, 1]
            L = to_rotated(P[self.s_L], Bc[self.s_L], cs, sn)
            R = to_rotated(P[self.s_R], Bc[self.s_R], cs, sn)
            pair = riemann_intermediates(L, R, g, rho0)
            T[j, k, :4] = mixed_edge_trace(pair, R, cs, sn, g, rho0)
        if len(self.m_j):
            j, k = self.m_j, self.m_k
            cs, sn = mesh.normals[j, k, 0], mesh.normals[j, k, 1]
            L = to_rotated(P[self.m_L], Bc[self.m_L], cs, sn)
            R = to_rotated(P[self.m_R], Bc[self.m_R], cs, sn)
            pair = riemann_intermediates(L, R, g, rho0)
            rot = sample_origin(pair, L, R)
            u, v = rotate_out(rot[:, 1], rot[:, 2], cs, sn)
            rot[:, 1] = u
            rot[:, 2] = v
            T[j, k, :4] = rot
            T[self.m_nb, self.m_ke, :4] = rot
        if len(self.b_j):
            T[self.b_j, self.b_k, :4] = P[self.b_S, :4]
        return self.count
