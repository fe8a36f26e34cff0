"""Semi-discrete central-upwind right-hand side.

The array functions in the first half (flux vectors, one-sided speeds, edge
fluxes, source quadrature) are straightforward vectorized formulas used for
inspection and as the reference for the compiled kernels.
:class:`SpatialOperator` is the production path: it owns the work arrays and
calls primitives -> reconstruction -> mixed-cell traces -> fluxes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, PositivityError
from .mesh import Bathymetry, TriMesh
from .reconstruction import NCOMP, desingularization_tau
from .riemann import MixedTraces

SOURCE_DT_RATIO = 1.0   # the partial-step weight in the source quadrature


@dataclass(frozen=True)
class PhysicsParams:
    g: float = 1.0
    rho0: float = 997.0
    sigma: float = 1e-6

    def __post_init__(self):
        for name in ("g", "rho0", "sigma"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidArgumentError(f"{name} must be positive, got {v!r}")


@dataclass
class EdgeSpeeds:
    a_in: np.ndarray
    a_out: np.ndarray


def _split(U, B):
    U = np.asarray(U, dtype=np.float64)
    h = U[..., 0] - B
    if np.any(h < 0.0):
        raise PositivityError(f"negative depth {h.min():.3e} in flux evaluation")
    wet = h > 0.0
    hs = np.where(wet, h, 1.0)
    u = np.where(wet, U[..., 1] / hs, 0.0)
    v = np.where(wet, U[..., 2] / hs, 0.0)
    rho = np.where(wet, U[..., 3] / hs, 0.0)
    return h, u, v, rho


def flux_vectors(U, B, params: PhysicsParams):
    """Physical fluxes F, G (shape (..., 4)) of U = (w, hu, hv, h rho)."""
    U = np.asarray(U, dtype=np.float64)
    h, u, v, rho = _split(U, B)
    p = 0.5 * params.g / params.rho0 * rho * h * h
    hu, hv = U[..., 1], U[..., 2]
    F = np.stack([hu, hu * u + p, hu * v, hu * rho], axis=-1)
    G = np.stack([hv, hv * u, hv * v + p, hv * rho], axis=-1)
    return F, G


def local_speeds(UL, UR, B, cos, sin, params: PhysicsParams) -> EdgeSpeeds:
    gr = params.g / params.rho0
    lam = []
    for U in (UL, UR):
        h, u, v, rho = _split(U, B)
        rad = gr * h * rho
        if np.any(rad < 0.0):
            raise PositivityError("negative wave-speed radicand")
        un = u * cos + v * sin
        c = np.sqrt(rad)
        lam.append((un - c, un + c))
    lo = np.minimum(np.minimum(lam[0][0], lam[1][0]), 0.0)
    hi = np.maximum(np.maximum(lam[0][1], lam[1][1]), 0.0)
    return EdgeSpeeds(-lo, hi)


def edge_flux(UL, UR, B, speeds: EdgeSpeeds, ell, cos, sin, params: PhysicsParams):
    """Central-upwind numerical flux times edge length, with the small-speed fallback."""
    UL = np.asarray(UL, dtype=np.float64)
    UR = np.asarray(UR, dtype=np.float64)
    FL, GL = flux_vectors(UL, B, params)
    FR, GR = flux_vectors(UR, B, params)
    ain = np.asarray(speeds.a_in)[..., None]
    aout = np.asarray(speeds.a_out)[..., None]
    c = np.asarray(cos)[..., None]
    s = np.asarray(sin)[..., None]
    ell = np.asarray(ell)[..., None]
    asum = ain + aout
    ok = asum >= params.sigma
    den = np.where(ok, asum, 1.0)
    cu = ell / den * (c * (ain * FR + aout * FL) + s * (ain * GR + aout * GL)) \
        - ell / den * (ain * aout) * (UR - UL)
    central = 0.5 * ell * (c * (FL + FR) + s * (GL + GR))
    return np.where(ok, cu, central)


def source_quadrature(mesh: TriMesh, bathy: Bathymetry, centers, gradients, traces,
                      params: PhysicsParams, cells=None, ratio: float = SOURCE_DT_RATIO):
    """Cell averages (S2, S3) of the bed-slope source.

    Boundary term from the edge midpoint values of rho h^2, volume terms from
    the limited plane of (w, rho) at the vertices with the cell gradient.
    """
    cells = np.arange(mesh.n_cells) if cells is None else np.asarray(cells)
    g, rho0 = params.g, params.rho0
    P = np.asarray(centers)[cells]
    Gd = np.asarray(gradients)[cells]
    T = np.asarray(traces)[cells]
    hm = np.maximum(T[..., 0] - bathy.midpoint[cells], 0.0)
    edge = mesh.edge_len[cells] * T[..., 3] * hm * hm * ratio
    a = mesh.area[cells]
    vo = mesh.vert_off[cells]
    wv = P[:, None, 0] + np.einsum("jd,jkd->jk", Gd[:, 0, :], vo)
    rv = P[:, None, 3] + np.einsum("jd,jkd->jk", Gd[:, 3, :], vo)
    hv = wv - bathy.cell_vertex[cells]
    t1 = (rv * hv).sum(axis=1)
    t2 = (hv * hv).sum(axis=1)
    out = []
    for d in range(2):
        bsum = (edge * mesh.normals[cells][..., d]).sum(axis=1)
        out.append(0.5 * g * bsum / (a * rho0) - g / (3.0 * rho0) * t1 * Gd[:, 0, d]
                   - g / (6.0 * rho0) * Gd[:, 3, d] * t2)
    return out[0], out[1]


class SpatialOperator:
    """dU/dt for the six-column state (w, hu, hv, h rho, phi, f) on a fixed mesh."""

    def __init__(self, mesh: TriMesh, bathy: Bathymetry, params: PhysicsParams,
                 tau: float | None = None, eps: float = 1e-4, ratio: float = SOURCE_DT_RATIO,
                 backend=None):
        self.mesh = mesh
        self.bathy = bathy
        self.params = params
        self.tau = desingularization_tau(mesh) if tau is None else float(tau)
        self.eps = float(eps)
        self.ratio = float(ratio)
        self.k = kernels.get_backend(backend)
        nc = mesh.n_cells
        self.P = np.zeros((nc, NCOMP))
        self.G = np.zeros((nc, NCOMP, 2))
        self.T = np.zeros((nc, 3, NCOMP))
        self.dU = np.zeros((nc, NCOMP))
        self.amax = np.zeros(nc)
        self.Hedge = np.zeros((nc, 3, 4))
        self.mixed = np.zeros(nc, dtype=np.uint8)
        self.mixed_traces: MixedTraces | None = None
        self.all_cells = np.arange(nc, dtype=np.int64)
        self.clipped = 0
        self.Bc = np.ascontiguousarray(bathy.center)
        self.Bm = np.ascontiguousarray(bathy.midpoint)
        self.Bv = np.ascontiguousarray(bathy.cell_vertex)

    def set_mixed(self, mixed):
        """Install the mixed-cell flags and precompute their flanking single cells."""
        m = np.asarray(mixed, dtype=bool)
        self.mixed[:] = m
        self.mixed_traces = MixedTraces(self.mesh, m) if m.any() else None

    def stencil(self, cells):
        """Cells whose reconstruction is needed to evaluate fluxes of ``cells``."""
        nb = self.mesh.neighbors[cells].ravel()
        s = np.union1d(cells, nb[nb >= 0])
        return s.astype(np.int64)

    def rhs(self, U, cells=None, recon=None, store_edge=False):
        """Evaluate dU/dt on ``cells`` (all by default); returns the internal dU array.

        ``recon`` must contain ``cells`` and their edge neighbors.
        """
        p = self.params
        U = np.ascontiguousarray(U, dtype=np.float64)
        self.k.primitives(U, self.Bc, self.tau, self.eps * p.rho0, self.P)
        if cells is None:
            cells = recon = self.all_cells
        elif recon is None:
            recon = self.stencil(cells)
        self.k.reconstruct(self.P, self.mixed, recon, self.mesh.neighbors, self.mesh.lsq_w,
                           self.mesh.mid_off, self.G, self.T)
        if self.mixed_traces is not None:
            self.mixed_traces.apply(self.P, self.Bc, self.T, p.g, p.rho0)
        m = self.mesh
        self.clipped += self.k.fluxes(self.P, self.T, self.G, cells, m.neighbors, m.nbr_edge,
                                      m.edge_len, m.normals, m.area, m.vert_off, self.Bm, self.Bv,
                                      p.g, p.rho0, p.sigma, self.ratio, self.dU, self.amax,
                                      self.Hedge, bool(store_edge))
        return self.dU

    def conserved_traces(self):
        """(w, hu, hv, h rho) traces of the last evaluation, shape (nc, 3, 4)."""
        h = np.maximum(self.T[..., 0] - self.Bm, 0.0)
        return np.stack([self.T[..., 0], h * self.T[..., 1], h * self.T[..., 2],
                         h * self.T[..., 3]], axis=-1)


def assemble_rhs(state, mesh: TriMesh, bathy: Bathymetry, params: PhysicsParams | None = None,
                 mixed=None, eps: float = 1e-4):
    """One-shot dU/dt for a (nc, 4) or (nc, 6) state."""
    params = params or PhysicsParams()
    state = np.asarray(state, dtype=np.float64)
    U = np.zeros((len(state), NCOMP))
    U[:, :state.shape[1]] = state
    op = SpatialOperator(mesh, bathy, params, eps=eps)
    if mixed is not None:
        op.set_mixed(mixed)
    return op.rhs(U)[:, :state.shape[1]].copy()
