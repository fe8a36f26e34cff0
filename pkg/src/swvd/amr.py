"""Weak-local-residual error indicator, flagging, remeshing and state projection."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import InterfaceTooWideError
from .geometry import clip_convex, clip_halfplane, polygon_area_centroid
from .hierarchy import RED, ActiveMesh, MeshHierarchy
from .interface import FLUID1, FLUID2, MIXED, InterfaceState
from .mesh import TriMesh

REFINE, KEEP, COARSEN = 1, 0, -1
DONOR_DIAMETERS = 5.0


@dataclass
class WlrField:
    Ew: np.ndarray        # per vertex
    Erho: np.ndarray      # per vertex
    e: np.ndarray         # per cell
    scale: float


@dataclass
class ProjectionStats:
    copied: int = 0
    planes: int = 0
    clipped: int = 0
    interface_cells: int = 0
    clamped_depth: int = 0
    clamped_density: int = 0
    defect: np.ndarray = field(default_factory=lambda: np.zeros(4))


def wlr_errors(U0, U1, mesh: TriMesh, dt: float, bathy_center=None,
               norm: float | None = None) -> WlrField:
    """Node residuals of w and h*rho between two consecutive solutions on one mesh.

    E_i = (1/D) sum_c [ |T|/3 (q^n - q^{n+1}) + (dt/2)|T| (a F + b G) ] with (a, b)
    the gradient of the hat function of node i on cell c and F, G the sums of
    the two time levels' fluxes (hu, hv for w; hu*rho, hv*rho for h*rho).
    D = dt * max|T| unless ``norm`` is given.
    """
    U0 = np.asarray(U0, dtype=np.float64)
    U1 = np.asarray(U1, dtype=np.float64)
    A = mesh.area
    D = float(dt * A.max()) if norm is None else float(norm)
    if not D > 0:
        D = 1.0
    a = mesh.hat_grad[..., 0]
    b = mesh.hat_grad[..., 1]
    vid = mesh.cells.ravel()
    Bc = np.zeros(mesh.n_cells) if bathy_center is None else np.asarray(bathy_center)

    def node_sum(q0, q1, F, G):
        c = (A / 3.0 * (q0 - q1))[:, None] + 0.5 * dt * A[:, None] * (a * F[:, None] + b * G[:, None])
        return np.bincount(vid, weights=c.ravel(), minlength=mesh.n_vertices) / D

    def rho_flux(U):
        h = U[:, 0] - Bc
        wet = h > 0
        rho = np.where(wet, U[:, 3] / np.where(wet, h, 1.0), 0.0)
        return U[:, 1] * rho, U[:, 2] * rho

    Ew = node_sum(U0[:, 0], U1[:, 0], U0[:, 1] + U1[:, 1], U0[:, 2] + U1[:, 2])
    F0, G0 = rho_flux(U0)
    F1, G1 = rho_flux(U1)
    Er = node_sum(U0[:, 3], U1[:, 3], F0 + F1, G0 + G1)
    ev = np.maximum(np.abs(Ew), np.abs(Er))[mesh.cells].max(axis=1)
    return WlrField(Ew, Er, ev, D)


def flag(wlr: WlrField, sigma_tol: float, levels, max_level: int, coarsen_factor: float = 0.1,
         floor: float = 0.0):
    """REFINE where e > sigma_tol*max(e) and level < max_level; COARSEN where e < coarsen_factor*omega.

    When max(e) <= floor nothing is refined and every cell is a coarsening candidate.
    """
    e = np.asarray(wlr.e)
    emax = float(e.max()) if len(e) else 0.0
    out = np.zeros(len(e), dtype=np.int8)
    if emax <= floor:
        out[:] = COARSEN
        return out
    omega = sigma_tol * emax
    out[e < coarsen_factor * omega] = COARSEN
    out[(e > omega) & (np.asarray(levels) < max_level)] = REFINE
    return out


def interface_flags(flags, am: ActiveMesh, cls, buffer: int = 1):
    """Force refinement of mixed cells (plus ``buffer`` rings) and block their coarsening."""
    flags = np.array(flags, dtype=np.int8, copy=True)
    mark = np.asarray(cls) == MIXED
    front = np.nonzero(mark)[0]
    nbr = am.mesh.neighbors
    for _ in range(buffer):
        nb = nbr[front].ravel()
        nb = np.unique(nb[nb >= 0])
        nb = nb[~mark[nb]]
        mark[nb] = True
        front = nb
    flags[mark] = REFINE
    return flags, mark


def apply_flags(h: MeshHierarchy, am: ActiveMesh, flags, cls=None, protect=None):
    """Turn per-cell flags into tree edits; returns (n_refined, n_coarsened)."""
    flags = np.asarray(flags)
    owner = am.owner
    ref_leaves = np.unique(owner[flags == REFINE])
    # a leaf coarsens only if all of its cells (green halves included) do
    n_leaf = np.max(owner) + 1
    allc = np.ones(n_leaf, dtype=bool)
    np.logical_and.at(allc, owner, flags == COARSEN)
    if protect is not None:
        np.logical_and.at(allc, owner, ~np.asarray(protect))
    fluid = np.zeros(n_leaf, dtype=np.int64)
    if cls is not None:
        c = np.asarray(cls).astype(np.int64)
        np.maximum.at(fluid, owner, np.where(c == MIXED, 99, c))
        bad = np.zeros(n_leaf, dtype=bool)
        np.logical_or.at(bad, owner, c == MIXED)
        allc &= ~bad
    leaves = np.unique(owner)
    cand = leaves[allc[leaves] & (h.parent.a[leaves] >= 0)]
    parents, cnt = np.unique(h.parent.a[cand], return_counts=True)
    parents = parents[cnt == 4]
    if cls is not None and len(parents):
        kids = h.child.a[parents][:, None] + np.arange(4)
        f = fluid[kids]
        parents = parents[(f == f[:, :1]).all(axis=1)]
    if len(parents) and len(ref_leaves):
        # never coarsen a parent one of whose children is being refined
        drop = np.isin(parents, h.parent.a[ref_leaves])
        parents = parents[~drop]
    nc = h.coarsen(parents)
    nr = h.refine(ref_leaves)
    return nr, nc


# -- projection ------------------------------------------------------------------------

def conserved_planes(U, mesh: TriMesh):
    """Limited gradients (nc, 6, 2) of the conserved averages."""
    P = np.ascontiguousarray(U, dtype=np.float64)
    nc = mesh.n_cells
    G = np.zeros((nc, P.shape[1], 2))
    T = np.zeros((nc, 3, P.shape[1]))
    kernels.reconstruct(P, np.zeros(nc, dtype=np.uint8), np.arange(nc, dtype=np.int64),
                        mesh.neighbors, mesh.lsq_w, mesh.mid_off, G, T)
    return G


def _lineage_map(h: MeshHierarchy, old: ActiveMesh):
    order = np.argsort(old.owner, kind="stable")
    so = old.owner[order]
    return so, order


def _cells_of(node, so, order):
    lo = np.searchsorted(so, node, side="left")
    hi = np.searchsorted(so, node, side="right")
    return order[lo:hi]


def project(h: MeshHierarchy, old: ActiveMesh, U_old, new: ActiveMesh, cls_old=None,
            iface_old: InterfaceState | None = None, stats: ProjectionStats | None = None):
    """Cell averages (nc_new, 6) on ``new`` from the state on ``old``.

    Unchanged cells are copied. Other cells integrate the limited planes of
    the overlapping old cells (found through the tree lineage). Cells that
    overlap an old mixed cell take their flow values from nearby reliable cells
    once the level set has been projected and the new cells classified; the
    returned interface state is classified on the new mesh.
    """
    stats = stats if stats is not None else ProjectionStats()
    U_old = np.asarray(U_old, dtype=np.float64)
    om, nm = old.mesh, new.mesh
    nc = nm.n_cells
    ncol = U_old.shape[1]
    out = np.zeros((nc, ncol))
    cls_old = np.full(om.n_cells, FLUID1, dtype=np.int8) if cls_old is None else np.asarray(cls_old)
    old_mixed = cls_old == MIXED

    ok_keys = old.keys
    korder = np.argsort(ok_keys)
    ks = ok_keys[korder]
    nk = new.keys
    pos = np.minimum(np.searchsorted(ks, nk), len(ks) - 1)
    same = ks[pos] == nk
    src = korder[pos]
    out[same] = U_old[src[same]]
    stats.copied += int(same.sum())
    changed = np.nonzero(~same)[0]
    touch = np.zeros(nc, dtype=bool)
    if len(changed) == 0:
        iface_new = _carry_interface(iface_old, out, nm)
        return out, iface_new, stats

    G = conserved_planes(U_old, om)
    so, order = _lineage_map(h, old)
    chords = None
    if iface_old is not None and old_mixed.any():
        cells, n, alpha, _ = iface_old.segments(om)
        chords = {int(c): (n[i], alpha[i]) for i, c in enumerate(cells)}
    ntri = nm.vertices[nm.cells]
    otri = om.vertices[om.cells]
    for c in changed:
        node = int(new.owner[c])
        red_new = new.code[c] == RED
        anc = [node] + h.ancestors(node)
        cand_up = [(a, _cells_of(a, so, order)) for a in anc]
        val = None
        for a, oc in cand_up:
            if len(oc) == 1 and old.code[oc[0]] == RED:
                o = oc[0]
                val = U_old[o] + G[o] @ (nm.bary[c] - om.bary[o])
                stats.planes += 1
                if old_mixed[o]:
                    touch[c] = True
                    if chords is not None and o in chords and ncol > 5:
                        nrm, al = chords[o]
                        ar, _ = polygon_area_centroid(clip_halfplane(ntri[c], nrm, al))
                        val[5] = ar / nm.area[c]
                break
        if val is None:
            up = [oc for _, oc in cand_up if len(oc)]
            down = []
            stack = [node]
            while stack:
                n_ = stack.pop()
                for ch in h.children(n_):
                    oc = _cells_of(ch, so, order)
                    if len(oc):
                        down.append(oc)
                    elif h.child.a[ch] >= 0:
                        stack.append(int(ch))
            acc = np.zeros(ncol)
            for inside, group in ((False, up), (red_new, down)):
                for oc in group:
                    for o in oc:
                        if inside:
                            poly, ar, cen = otri[o], om.area[o], om.bary[o]
                        else:
                            poly = clip_convex(otri[o], ntri[c])
                            if len(poly) < 3:
                                continue
                            ar, cen = polygon_area_centroid(poly)
                            if ar <= 0:
                                continue
                        piece = ar * (U_old[o] + G[o] @ (cen - om.bary[o]))
                        if old_mixed[o]:
                            touch[c] = True
                            if chords is not None and o in chords and ncol > 5:
                                nrm, al = chords[o]
                                a1, _ = polygon_area_centroid(clip_halfplane(poly, nrm, al))
                                piece[5] = a1
                        acc += piece
            val = acc / nm.area[c]
            stats.clipped += 1
        out[c] = val

    iface_new = _carry_interface(iface_old, out, nm)
    if iface_new is not None and touch.any():
        _fill_interface_cells(out, touch, iface_new, old, U_old, cls_old, new, stats)
    # keep depths and densities admissible
    Bc = new.bathy.center
    low = out[:, 0] < Bc
    stats.clamped_depth += int(low[changed].sum())
    out[low, 0] = Bc[low]
    neg = out[:, 3] < 0
    stats.clamped_density += int(neg.sum())
    out[neg, 3] = 0.0
    if ncol > 5:
        np.clip(out[:, 5], 0.0, 1.0, out=out[:, 5])
        if iface_new is not None:
            iface_new.f = out[:, 5]
    stats.defect = stats.defect + ((nm.area[:, None] * out[:, :4]).sum(axis=0)
                                   - (om.area[:, None] * U_old[:, :4]).sum(axis=0))
    return out, iface_new, stats


def _carry_interface(iface_old, U, mesh):
    if iface_old is None or U.shape[1] < 6:
        return None
    st = InterfaceState(phi=U[:, 4], f=U[:, 5], rho1=iface_old.rho1, rho2=iface_old.rho2,
                        diagnostics=iface_old.diagnostics)
    st.update(mesh)
    return st


def _fill_interface_cells(out, touch, iface: InterfaceState, old: ActiveMesh, U_old, cls_old,
                          new: ActiveMesh, stats: ProjectionStats):
    om, nm = old.mesh, new.mesh
    cls = iface.cls
    cells = np.nonzero(touch)[0]
    stats.interface_cells += len(cells)
    rad = DONOR_DIAMETERS * nm.edge_len[cells].max(axis=1)
    donors = {}
    Bo = old.bathy.center
    h_old = np.maximum(U_old[:, 0] - Bo, 0.0)
    hs = np.where(h_old > 0, h_old, 1.0)
    prim = np.column_stack([U_old[:, 0], np.where(h_old > 0, U_old[:, 1] / hs, 0.0),
                            np.where(h_old > 0, U_old[:, 2] / hs, 0.0),
                            np.where(h_old > 0, U_old[:, 3] / hs, 0.0)])
    for fl in (FLUID1, FLUID2):
        idx = np.nonzero(cls_old == fl)[0]
        if len(idx) == 0:
            donors[fl] = np.full(len(cells), -1)
            continue
        d, k = cKDTree(om.bary[idx]).query(nm.bary[cells])
        donors[fl] = np.where(d <= rad, idx[k], -1)
    Bc = new.bathy.center
    for i, c in enumerate(cells):
        kind = cls[c]
        if kind in (FLUID1, FLUID2):
            o = donors[kind][i]
            if o < 0:
                raise InterfaceTooWideError(f"no reliable donor of fluid {kind} near new cell {c}")
            w, u, v, rho = prim[o]
            h = max(w - Bc[c], 0.0)
            out[c, :4] = (w, h * u, h * v, h * rho)
        else:
            o1, o2 = donors[FLUID1][i], donors[FLUID2][i]
            if o1 < 0 or o2 < 0:
                raise InterfaceTooWideError(f"no reliable donors on both sides of new cell {c}")
            th = min(max(out[c, 5], 0.0), 1.0)
            p1, p2 = prim[o1], prim[o2]
            h1 = max(p1[0] - Bc[c], 0.0)
            h2 = max(p2[0] - Bc[c], 0.0)
            w = th * p1[0] + (1 - th) * p2[0]
            h = max(w - Bc[c], 0.0)
            hu = th * h1 * p1[1] + (1 - th) * h2 * p2[1]
            hv = th * h1 * p1[2] + (1 - th) * h2 * p2[2]
            press = th * h1 * h1 * p1[3] + (1 - th) * h2 * h2 * p2[3]
            out[c, :4] = (w, hu, hv, press / h if h > 0 else 0.0)
