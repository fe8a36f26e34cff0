"""Interface tracking between the two fluids.

The level set phi (positive in fluid 1) and the volume fraction f of fluid 1
are carried as cell averages. Vertex values phi* classify cells; mixed cells
get a unit normal from a quadratic least-squares fit of phi and a chord
{n . x = alpha} cutting off the fraction f on the fluid-1 side.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .geometry import clip_halfplane, polygon_area_centroid
from .mesh import TriMesh

FLUID1, FLUID2, MIXED = 1, 2, 0
F_EPS = 1e-12
COND_MAX = 1e10


@dataclass
class InterfaceDiagnostics:
    normal_fallbacks: int = 0
    clamped_fractions: int = 0
    chord_fallbacks: int = 0
    mass_defect: float = 0.0
    uncorrected_cells: int = 0
    reset_cells: int = 0
    reset_defect: float = 0.0       # volume change from mixed-cell resets
    reset_skipped: int = 0


@dataclass
class InterfaceState:
    """Interface fields on the current mesh."""
    phi: np.ndarray
    f: np.ndarray
    rho1: float
    rho2: float
    phi_star: np.ndarray | None = None
    cls: np.ndarray | None = None
    diagnostics: InterfaceDiagnostics = field(default_factory=InterfaceDiagnostics)
    _segments: tuple | None = None

    @property
    def mixed(self):
        return self.cls == MIXED

    def update(self, mesh: TriMesh):
        """Recompute phi* and the classification; invalidates cached chords."""
        self.phi_star = vertex_level_set(self.phi, mesh)
        self.cls = classify(self.phi_star, mesh)
        self._segments = None
        return self.cls

    def segments(self, mesh: TriMesh):
        """(cells, normals, alpha, endpoints) for all mixed cells, cached until the next update."""
        if self._segments is None:
            cells = np.nonzero(self.cls == MIXED)[0]
            n = interface_normal(mesh, self.phi, cells, self.diagnostics)
            alpha, ends = interface_endpoints(mesh, cells, n, self.f[cells], self.diagnostics,
                                              phi_star=self.phi_star)
            self._segments = (cells, n, alpha, ends)
        return self._segments


# -- level set ---------------------------------------------------------------

def vertex_level_set(phi, mesh: TriMesh, vertex=None):
    """Inverse-distance weighted vertex values of the cell averages."""
    phi = np.asarray(phi, dtype=np.float64)
    d = np.sqrt(((mesh.vertices[mesh.cells] - mesh.bary[:, None, :]) ** 2).sum(-1))
    c = 1.0 / d
    vid = mesh.cells.ravel()
    num = np.bincount(vid, weights=(c * phi[:, None]).ravel(), minlength=mesh.n_vertices)
    den = np.bincount(vid, weights=c.ravel(), minlength=mesh.n_vertices)
    out = num / den
    return out if vertex is None else out[vertex]


def classify(phi_star, mesh: TriMesh):
    """FLUID1 if all three vertex values are > 0, FLUID2 if all < 0, MIXED otherwise."""
    pv = np.asarray(phi_star)[mesh.cells]
    cls = np.full(mesh.n_cells, MIXED, dtype=np.int8)
    cls[(pv > 0).all(axis=1)] = FLUID1
    cls[(pv < 0).all(axis=1)] = FLUID2
    return cls


def _vertex_stencils(mesh: TriMesh, cells):
    """Ragged stencils (rows, members) of cells sharing a vertex with each of ``cells``."""
    cells = np.asarray(cells, dtype=np.int64)
    verts = mesh.cells[cells].ravel()
    row = np.repeat(np.arange(len(cells)), 3)
    cnt = mesh.vc_ptr[verts + 1] - mesh.vc_ptr[verts]
    rows = np.repeat(row, cnt)
    start = np.repeat(mesh.vc_ptr[verts], cnt)
    off = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    mem = mesh.vc_idx[start + off]
    key = np.unique(rows * mesh.n_cells + mem)
    return key // mesh.n_cells, key % mesh.n_cells


def interface_normal(mesh: TriMesh, phi, cells, diagnostics: InterfaceDiagnostics | None = None):
    """Unit normals grad(phi)/|grad(phi)| from a quadratic fit over the vertex stencil.

    The fit is done in coordinates centred at the cell barycentre and scaled by
    the cell size. Ill-conditioned stencils fall back to a linear fit.
    """
    cells = np.atleast_1d(np.asarray(cells, dtype=np.int64))
    m = len(cells)
    if m == 0:
        return np.zeros((0, 2))
    phi = np.asarray(phi, dtype=np.float64)
    rows, mem = _vertex_stencils(mesh, cells)
    scale = np.sqrt(mesh.area[cells])
    d = (mesh.bary[mem] - mesh.bary[cells[rows]]) / scale[rows, None]
    x, y = d[:, 0], d[:, 1]
    A = np.stack([np.ones_like(x), x, y, x * x, x * y, y * y], axis=1)
    rhs = phi[mem]
    N = np.zeros((m, 6, 6))
    b = np.zeros((m, 6))
    np.add.at(N, rows, A[:, :, None] * A[:, None, :])
    np.add.at(b, rows, A * rhs[:, None])
    cond = np.linalg.cond(N)
    good = np.isfinite(cond) & (cond < COND_MAX)
    grad = np.zeros((m, 2))
    if good.any():
        sol = np.linalg.solve(N[good], b[good][..., None])[..., 0]
        grad[good] = sol[:, 1:3]
    bad = np.nonzero(~good)[0]
    if len(bad):
        if diagnostics is not None:
            diagnostics.normal_fallbacks += len(bad)
        N3 = N[bad][:, :3, :3]
        b3 = b[bad][:, :3]
        sol = np.array([np.linalg.lstsq(N3[i], b3[i], rcond=None)[0] for i in range(len(bad))])
        grad[bad] = sol[:, 1:3]
    nrm = np.sqrt((grad ** 2).sum(axis=1))
    zero = ~(nrm > 0)
    if zero.any() and diagnostics is not None:
        diagnostics.normal_fallbacks += int(zero.sum())
    out = np.where(zero[:, None], np.nan, grad / np.where(zero, 1.0, nrm)[:, None])
    return out


def chord_offset(tri, n, f):
    """alpha with area{x in tri : n.x >= alpha} = f |tri|, vectorized over (m,3,2) triangles."""
    tri = np.asarray(tri, dtype=np.float64).reshape(-1, 3, 2)
    n = np.asarray(n, dtype=np.float64).reshape(-1, 2)
    f = np.broadcast_to(np.asarray(f, dtype=np.float64), (len(tri),))
    s = np.sort(np.einsum("mkd,md->mk", tri, n), axis=1)
    s0, s1, s2 = s[:, 0], s[:, 1], s[:, 2]
    cut = (s2 - s1) / (s2 - s0)
    top = s2 - np.sqrt(f * (s2 - s0) * (s2 - s1))
    bot = s0 + np.sqrt((1.0 - f) * (s1 - s0) * (s2 - s0))
    return np.where(f <= cut, top, bot)


def _line_crossings(tri, sval, alpha):
    """Two points where s = alpha crosses the boundary of each triangle (m,2,2)."""
    m = len(tri)
    out = np.full((m, 2, 2), np.nan)
    cnt = np.zeros(m, dtype=np.int64)
    for k in range(3):
        a, b = (k + 1) % 3, (k + 2) % 3
        sa = sval[:, a] - alpha
        sb = sval[:, b] - alpha
        hit = ((sa <= 0) & (sb >= 0)) | ((sa >= 0) & (sb <= 0))
        hit &= sa != sb
        t = np.where(hit, sa / np.where(sa != sb, sa - sb, 1.0), 0.0)
        p = tri[:, a] + t[:, None] * (tri[:, b] - tri[:, a])
        if cnt.max(initial=0) > 0:
            # a crossing exactly at a shared vertex is reported by both edges
            dup = (cnt > 0) & np.all(np.isclose(p, out[np.arange(m), 0], rtol=0, atol=1e-14), axis=1)
            hit &= ~dup
        put = hit & (cnt < 2)
        out[np.nonzero(put)[0], cnt[put]] = p[put]
        cnt += put
    single = cnt == 1
    out[single, 1] = out[single, 0]
    return out


def interface_endpoints(mesh: TriMesh, cells, normals, f, diagnostics=None, phi_star=None):
    """Chord offsets alpha and endpoints (m,2,2) for mixed ``cells``.

    Fluid 1 occupies {n . x >= alpha}. Fractions outside (0,1) are clamped;
    cells without a usable normal use the chord through the phi* zero
    crossings instead.
    """
    cells = np.atleast_1d(np.asarray(cells, dtype=np.int64))
    normals = np.asarray(normals, dtype=np.float64).reshape(-1, 2).copy()
    f = np.atleast_1d(np.asarray(f, dtype=np.float64))
    tri = mesh.vertices[mesh.cells[cells]]
    fc = np.clip(f, F_EPS, 1.0 - F_EPS)
    if diagnostics is not None:
        diagnostics.clamped_fractions += int(np.count_nonzero(fc != f))
    badn = ~np.all(np.isfinite(normals), axis=1)
    alpha = np.zeros(len(cells))
    if badn.any():
        if diagnostics is not None:
            diagnostics.chord_fallbacks += int(badn.sum())
        for i in np.nonzero(badn)[0]:
            normals[i], alpha[i] = _zero_crossing_chord(tri[i], None if phi_star is None
                                                        else phi_star[mesh.cells[cells[i]]])
    ok = ~badn
    alpha[ok] = chord_offset(tri[ok], normals[ok], fc[ok])
    sval = np.einsum("mkd,md->mk", tri, normals)
    ends = _line_crossings(tri, sval, alpha)
    return alpha, ends


def _zero_crossing_chord(tri, pv):
    """Line through the zero crossings of the linear interpolant of vertex values."""
    if pv is None or not np.all(np.isfinite(pv)):
        return np.array([1.0, 0.0]), float(tri[:, 0].mean())
    a = 0.5 * ((tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1])
               - (tri[2, 0] - tri[0, 0]) * (tri[1, 1] - tri[0, 1]))
    gx = gy = 0.0
    for k in range(3):
        p, q = tri[(k + 1) % 3], tri[(k + 2) % 3]
        gx += pv[k] * (p[1] - q[1]) / (2 * a)
        gy += pv[k] * (q[0] - p[0]) / (2 * a)
    g = np.hypot(gx, gy)
    if g == 0:
        return np.array([1.0, 0.0]), float(tri[:, 0].mean())
    n = np.array([gx, gy]) / g
    c = tri.mean(axis=0)
    # plane value at the centroid is the mean of the vertex values
    alpha = float(n @ c - np.mean(pv) / g)
    return n, alpha


def fluid1_fraction(tri, n, alpha):
    """Exact area fraction of {n.x >= alpha} in a triangle (polygon clipping)."""
    tri = np.asarray(tri, dtype=np.float64)
    a_tot, _ = polygon_area_centroid(tri)
    a, _ = polygon_area_centroid(clip_halfplane(tri, n, alpha))
    return a / a_tot


# -- initial data --------------------------------------------------------------

def _edge_root(sdf, p, q, sp, sq, iters=60):
    """Bisection for sdf = 0 on segments p->q (vectorized)."""
    lo = np.zeros(len(p))
    hi = np.ones(len(p))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        x = p + mid[:, None] * (q - p)
        sm = sdf(x[:, 0], x[:, 1])
        same = np.sign(sm) == np.sign(sp)
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return p + (0.5 * (lo + hi))[:, None] * (q - p)


def initial_fraction(mesh: TriMesh, sdf):
    """Fluid-1 area fraction per cell from the polygon through edge crossings of sdf = 0.

    Fluid 1 is sdf > 0. Cells without a sign change get 0 or 1 from the
    barycentre sign.
    """
    sv = np.asarray(sdf(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=np.float64)
    pv = sv[mesh.cells]
    f = (sdf(mesh.bary[:, 0], mesh.bary[:, 1]) > 0).astype(np.float64)
    cut = np.nonzero(~((pv > 0).all(1) | (pv <= 0).all(1)))[0]
    if len(cut) == 0:
        return f
    tri = mesh.vertices[mesh.cells[cut]]
    sp = pv[cut]
    roots = {}
    for k in range(3):
        a, b = (k + 1) % 3, (k + 2) % 3
        chg = (sp[:, a] > 0) != (sp[:, b] > 0)
        idx = np.nonzero(chg)[0]
        roots[k] = (idx, _edge_root(sdf, tri[idx, a], tri[idx, b], sp[idx, a], sp[idx, b]))
    rmap = [dict() for _ in range(3)]
    for k in range(3):
        for i, r in zip(*roots[k]):
            rmap[k][i] = r
    for i in range(len(cut)):
        poly = []
        for v in range(3):
            if sp[i, v] > 0:
                poly.append(tri[i, v])
            k = (v + 2) % 3         # edge from vertex v to vertex v+1
            if i in rmap[k]:
                poly.append(rmap[k][i])
        a, _ = polygon_area_centroid(np.array(poly)) if len(poly) >= 3 else (0.0, None)
        f[cut[i]] = min(max(a / mesh.area[cut[i]], 0.0), 1.0)
    return f


# -- cell-average correction ----------------------------------------------------

def correct_cell_averages(U, cls, rho1, rho2, bathy_center, mesh: TriMesh,
                          diagnostics: InterfaceDiagnostics | None = None):
    """Reset h*rho of single-fluid cells to h*rho_i and give the change to mixed neighbours.

    Two phases: all defects are computed from the incoming state, then the
    increments are applied, so the result does not depend on cell order.
    Returns the corrected state (a copy).
    """
    U = np.array(U, dtype=np.float64, copy=True)
    cls = np.asarray(cls)
    h = np.maximum(U[:, 0] - bathy_center, 0.0)
    single = cls != MIXED
    target = np.where(cls == FLUID1, rho1, rho2) * h
    delta = np.where(single, U[:, 3] - target, 0.0)
    delta[np.abs(delta) <= 1e-13 * np.abs(target)] = 0.0
    nb = mesh.neighbors
    nbm = (nb >= 0) & (cls[np.maximum(nb, 0)] == MIXED)
    nmix = nbm.sum(axis=1)
    give = single & (delta != 0.0) & (nmix > 0)
    orphan = single & (delta != 0.0) & (nmix == 0)
    share = np.where(give, delta / np.maximum(nmix, 1), 0.0)
    inc = np.zeros(len(U))
    rows, ks = np.nonzero(nbm & give[:, None])
    np.add.at(inc, nb[rows, ks], share[rows])
    U[single, 3] = target[single]
    U[:, 3] += inc
    if diagnostics is not None:
        diagnostics.mass_defect += float((mesh.area[orphan] * delta[orphan]).sum())
        diagnostics.uncorrected_cells += int(orphan.sum())
    return U


RESET_DIAMETERS = 5.0


def _ring_band(mesh: TriMesh, seeds, rings: int):
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


def reset_mixed_cells(U, cls, bathy_center, mesh: TriMesh,
                      diagnostics: InterfaceDiagnostics | None = None):
    """Rebuild the flow averages of mixed cells from nearby single-fluid cells.

    Mixed-cell fluxes come from Riemann traces, not from the cell's own
    average, so that average has no restoring feedback. It is replaced by the
    f-weighted blend of the nearest fluid-1 and fluid-2 cells: w, hu, hv and
    h^2 rho are blended, then h rho = (h^2 rho) / h. Cells without a donor of
    each fluid within a few diameters are left untouched. Returns a copy.
    """
    U = np.array(U, dtype=np.float64, copy=True)
    cls = np.asarray(cls)
    cells = np.nonzero(cls == MIXED)[0]
    if len(cells) == 0:
        return U
    B = np.asarray(bathy_center)
    h = np.maximum(U[:, 0] - B, 0.0)
    hs = np.where(h > 0, h, 1.0)
    vel = np.where(h[:, None] > 0, U[:, 1:4] / hs[:, None], 0.0)   # u, v, rho
    rad = RESET_DIAMETERS * mesh.edge_len[cells].max(axis=1)
    # donors lie within a few diameters, so a neighbourhood band of rings suffices
    band = _ring_band(mesh, cells, 2 * int(RESET_DIAMETERS) + 2)
    donors = []
    for fl in (FLUID1, FLUID2):
        idx = band[cls[band] == fl]
        if len(idx) == 0:
            donors.append(np.full(len(cells), -1))
            continue
        d, k = cKDTree(mesh.bary[idx]).query(mesh.bary[cells])
        donors.append(np.where(d <= rad, idx[k], -1))
    ok = (donors[0] >= 0) & (donors[1] >= 0)
    c, o1, o2 = cells[ok], donors[0][ok], donors[1][ok]
    th = np.clip(U[c, 5], 0.0, 1.0)
    h1 = np.maximum(U[o1, 0] - B[c], 0.0)
    h2 = np.maximum(U[o2, 0] - B[c], 0.0)
    w = th * U[o1, 0] + (1 - th) * U[o2, 0]
    hn = np.maximum(w - B[c], 0.0)
    old_w = U[c, 0].copy()
    U[c, 0] = np.maximum(w, B[c])
    U[c, 1] = th * h1 * vel[o1, 0] + (1 - th) * h2 * vel[o2, 0]
    U[c, 2] = th * h1 * vel[o1, 1] + (1 - th) * h2 * vel[o2, 1]
    press = th * h1 * h1 * vel[o1, 2] + (1 - th) * h2 * h2 * vel[o2, 2]
    U[c, 3] = np.where(hn > 0, press / np.where(hn > 0, hn, 1.0), 0.0)
    if diagnostics is not None:
        diagnostics.reset_cells += len(c)
        diagnostics.reset_defect += float((mesh.area[c] * (U[c, 0] - old_w)).sum())
        diagnostics.reset_skipped += int((~ok).sum())
    return U


# -- standalone scalar transport -------------------------------------------------

def advect_scalar(q, velocity, dt, mesh: TriMesh, sigma: float = 1e-6):
    """One SSPRK2 step of q_t + div(u q) = q div(u) for a frozen cell velocity field.

    Uses the same flux kernel as the flow solver (scalar column 4) with a
    flat unit-depth dummy flow.
    """
    nc = mesh.n_cells
    vel = np.asarray(velocity, dtype=np.float64).reshape(nc, 2)
    P = np.zeros((nc, 6))
    P[:, 0] = 1.0
    P[:, 1:3] = vel
    P[:, 3] = 1.0
    G = np.zeros((nc, 6, 2))
    T = np.zeros((nc, 3, 6))
    dU = np.zeros((nc, 6))
    amax = np.zeros(nc)
    H = np.zeros((nc, 3, 4))
    cells = np.arange(nc, dtype=np.int64)
    zero = np.zeros((nc, 3))
    mixed = np.zeros(nc, dtype=np.uint8)

    def L(qq):
        P[:, 4] = qq
        kernels.reconstruct(P, mixed, cells, mesh.neighbors, mesh.lsq_w, mesh.mid_off, G, T)
        kernels.fluxes(P, T, G, cells, mesh.neighbors, mesh.nbr_edge, mesh.edge_len, mesh.normals,
                       mesh.area, mesh.vert_off, zero, zero, 1.0, 1.0, sigma, 1.0, dU, amax, H, False)
        return dU[:, 4].copy()

    q = np.asarray(q, dtype=np.float64)
    q1 = q + dt * L(q)
    return 0.5 * q + 0.5 * (q1 + dt * L(q1))
