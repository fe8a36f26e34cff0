"""Level-based local time stepping with SSPRK2 substeps.

A global step of size dt is split per level l into substeps of at most
2^-l dt (shrunk further when the level's wave speeds grow). The level with
the earliest current time always advances next, coarsest first on ties;
states of other levels are interpolated linearly in time (never
extrapolated). Fluxes across level boundaries are reconciled at the end of
the global step so that w, hu, hv and h*rho stay conservative.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cu import SpatialOperator
from .errors import PositivityError
from .mesh import TriMesh

CFL = 0.9
CFL_DENOM = 18.0
MAX_HALVINGS = 5
LEVEL_RTOL = 1e-10


def _min_alt(mesh: TriMesh):
    return mesh.altitudes.min(axis=1)


def assign_levels(mesh: TriMesh) -> np.ndarray:
    """Smallest l >= 0 with 2^l >= max_j(min_k r_jk) / min_k r_jk."""
    r = _min_alt(mesh)
    # relative slack absorbs rounding in vertex coordinates of congruent cells
    ratio = r.max() / r * (1.0 - LEVEL_RTOL)
    lev = np.maximum(np.ceil(np.log2(ratio)).astype(np.int64), 0)
    # guard the floating point log against an off-by-one either way
    lev = np.where(2.0 ** lev < ratio, lev + 1, lev)
    lev = np.where((lev > 0) & (2.0 ** (lev - 1) >= ratio), lev - 1, lev)
    return lev


def reference_dt(a_max: float, mesh: TriMesh, sigma: float = 1e-6, dt_still: float = 1e-2) -> float:
    """0.9 max_j(min_k r_jk) / (18 a_max), or ``dt_still`` when a_max < sigma."""
    if a_max < sigma:
        return float(dt_still)
    return CFL * float(_min_alt(mesh).max()) / (CFL_DENOM * a_max)


def local_dt(level: int, mu: float, dt: float) -> float:
    return 2.0 ** (-level) * dt / max(mu, 1.0)


def ssprk2_substep(U, rhs, dt):
    """Two forward-Euler stages and their average: U + dt L(U), then 1/2 U + 1/2 (U1 + dt L(U1))."""
    U1 = U + dt * rhs(U)
    return 0.5 * U + 0.5 * (U1 + dt * rhs(U1))


@dataclass
class StepStats:
    dt: float = 0.0
    a_max: float = 0.0
    substeps: dict = field(default_factory=dict)
    min_depth: float = np.inf
    min_hrho: float = np.inf
    stage_minima: list = field(default_factory=list)
    halvings: int = 0
    reflux_edges: int = 0
    reflux_skipped: int = 0
    rhs_cells: int = 0


class LocalStepper:
    """Advance a six-column state over one global step on a fixed mesh."""

    def __init__(self, op: SpatialOperator, levels=None, record_stages: bool = False,
                 dt_still: float = 1e-2, reflux: bool = True):
        self.op = op
        mesh = op.mesh
        self.levels = assign_levels(mesh) if levels is None else np.asarray(levels, dtype=np.int64)
        self.L = int(self.levels.max()) if len(self.levels) else 0
        self.cells = [np.nonzero(self.levels == l)[0].astype(np.int64) for l in range(self.L + 1)]
        self.stencils = [op.stencil(c) if len(c) else c for c in self.cells]
        self.record_stages = record_stages
        self.dt_still = dt_still
        nb = mesh.neighbors
        inner = nb >= 0
        j, k = np.nonzero(inner)
        diff = self.levels[j] != self.levels[nb[j, k]]
        j, k = j[diff], k[diff]
        keep = j < nb[j, k]
        self.iface_edges = (j[keep], k[keep], nb[j[keep], k[keep]], mesh.nbr_edge[j[keep], k[keep]])
        # nothing to reflux without level interfaces
        self.reflux = reflux and len(self.iface_edges[0]) > 0

    def _check(self, Uc, Bc, cells, stats: StepStats, label):
        h = Uc[:, 0] - Bc[cells]
        mh = float(h.min()) if len(h) else np.inf
        mr = float(Uc[:, 3].min()) if len(h) else np.inf
        stats.min_depth = min(stats.min_depth, mh)
        stats.min_hrho = min(stats.min_hrho, mr)
        if self.record_stages:
            stats.stage_minima.append((label, mh, mr))
        return mh >= 0.0 and mr >= 0.0

    def step(self, U, dt_max: float = np.inf, stats: StepStats | None = None):
        """One global step; returns (U_new, stats). ``dt_max`` clips the step (end time)."""
        op = self.op
        stats = stats or StepStats()
        Bc = op.Bc
        U = np.ascontiguousarray(U, dtype=np.float64)
        n = len(U)
        dU0 = op.rhs(U, store_edge=self.reflux).copy()
        H0 = op.Hedge.copy() if self.reflux else None
        amax0 = op.amax.copy()
        a_max = float(amax0.max()) if n else 0.0
        dt = min(reference_dt(a_max, op.mesh, op.params.sigma, self.dt_still), dt_max)
        stats.dt, stats.a_max = dt, a_max
        if dt <= 0:
            return U.copy(), stats
        acc = np.zeros((n, 3, 4)) if self.reflux else None

        Uprev = U.copy()
        Ucur = U.copy()
        t_prev = np.zeros(self.L + 1)
        t_cur = np.zeros(self.L + 1)
        first = np.ones(self.L + 1, dtype=bool)
        done = np.array([len(c) == 0 for c in self.cells])
        t_cur[done] = dt
        W = np.empty_like(U)
        eps_t = 1e-12 * dt

        def composite(t, own, own_vals):
            W[:] = Ucur
            for m in range(self.L + 1):
                if m == own or len(self.cells[m]) == 0:
                    continue
                span = t_cur[m] - t_prev[m]
                if span <= 0 or t >= t_cur[m]:
                    continue
                th = max((t - t_prev[m]) / span, 0.0)
                cm = self.cells[m]
                W[cm] = Uprev[cm] + th * (Ucur[cm] - Uprev[cm])
            if own_vals is not None:
                W[self.cells[own]] = own_vals
            return W

        while not done.all():
            cand = np.where(done, np.inf, t_cur)
            l = int(np.argmin(cand))          # argmin returns the coarsest on ties
            cl = self.cells[l]
            st = self.stencils[l]
            t = t_cur[l]
            if first[l]:
                L1 = dU0[cl]
                a_loc = float(amax0[cl].max())
                H1 = H0[cl] if self.reflux else None
            else:
                Wt = composite(t, l, None)
                L1 = op.rhs(Wt, cl, st, store_edge=self.reflux)[cl].copy()
                a_loc = float(op.amax[cl].max())
                H1 = op.Hedge[cl].copy() if self.reflux else None
                stats.rhs_cells += len(st)
            mu = a_loc / a_max if a_max > 0 else 0.0
            h = local_dt(l, mu, dt)
            if t + h >= dt - eps_t:
                h = dt - t
            U0l = Ucur[cl]
            for attempt in range(MAX_HALVINGS + 1):
                U1 = U0l + h * L1
                ok = self._check(U1, Bc, cl, stats, (l, t, 1))
                if ok:
                    W2 = composite(t + h, l, U1)
                    L2 = op.rhs(W2, cl, st, store_edge=self.reflux)[cl]
                    stats.rhs_cells += len(st)
                    Un = 0.5 * U0l + 0.5 * (U1 + h * L2)
                    ok = self._check(Un, Bc, cl, stats, (l, t, 2))
                if ok:
                    break
                if attempt == MAX_HALVINGS:
                    raise PositivityError(
                        f"negative depth or density on level {l} at t+{t:.6g} after "
                        f"{MAX_HALVINGS} step halvings (min h {stats.min_depth:.3e})")
                h *= 0.5
                stats.halvings += 1
            if self.reflux:
                acc[cl] += (0.5 * h) * (H1 + op.Hedge[cl])
            Uprev[cl] = U0l
            Ucur[cl] = Un
            t_prev[l] = t
            t_cur[l] = dt if t + h >= dt - eps_t else t + h
            first[l] = False
            stats.substeps[l] = stats.substeps.get(l, 0) + 1
            if t_cur[l] >= dt:
                done[l] = True

        if self.reflux and len(self.iface_edges[0]):
            self._reflux(Ucur, acc, stats)
        return Ucur, stats

    def _reflux(self, U, acc, stats: StepStats):
        """Replace the coarser side's time-integrated flux by the finer side's."""
        j, k, nb, ke = self.iface_edges
        lev = self.levels
        coarse_first = lev[j] < lev[nb]
        c = np.where(coarse_first, j, nb)
        kc = np.where(coarse_first, k, ke)
        f = np.where(coarse_first, nb, j)
        kf = np.where(coarse_first, ke, k)
        area = self.op.mesh.area
        corr = (acc[c, kc] + acc[f, kf]) / area[c, None]
        inc = np.zeros((len(U), 4))
        np.add.at(inc, c, corr)
        trial = U[:, :4] + inc
        bad = (trial[:, 0] < self.op.Bc) | (trial[:, 3] < 0)
        touched = np.zeros(len(U), dtype=bool)
        touched[c] = True
        skip = bad & touched
        stats.reflux_skipped += int(skip.sum())
        stats.reflux_edges += len(c)
        U[~skip, :4] = trial[~skip]


def advance(op: SpatialOperator, U, dt_max: float = np.inf, levels=None, **kw):
    """Convenience wrapper: one global step with a fresh :class:`LocalStepper`."""
    return LocalStepper(op, levels, **kw).step(U, dt_max)
