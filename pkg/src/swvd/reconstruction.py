"""Primitive variables, limited piecewise linear reconstruction and edge traces.

The reconstructed variables are (w, u, v, rho) plus the two interface scalars
(phi, f), stored as six columns. The production path runs through the
compiled kernels (see :mod:`swvd.kernels`); the functions here expose the
individual steps with array-in/array-out signatures.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import PositivityError
from .mesh import Bathymetry, TriMesh

NCOMP = 6
W, U, V, RHO, PHI, F = range(NCOMP)
DRY_TOL = 1e-12


@dataclass
class Diagnostics:
    singular_gradients: int = 0
    clipped_traces: int = 0


@dataclass
class PrimitiveReconstruction:
    centers: np.ndarray           # (nc, 6)
    gradients: np.ndarray         # (nc, 6, 2) limited
    traces: np.ndarray            # (nc, 3, 6) values at edge midpoints
    diagnostics: Diagnostics = field(default_factory=Diagnostics)


def desingularization_tau(mesh: TriMesh) -> float:
    return float(np.max(mesh.area) ** 2)


def primitive_centers(state, bathy_center, tau: float, eps: float, rho0: float):
    """Center values (w, u, v, rho[, phi, f]) from conserved averages.

    For h^2 >= tau the velocities and density are exact quotients, otherwise
    u = 2 h (hu) / (h^2 + max(h^2, tau)) and rho is floored at eps*rho0.
    """
    state = np.asarray(state, dtype=np.float64)
    ncol = state.shape[1]
    U = np.zeros((len(state), NCOMP))
    U[:, :ncol] = state
    P = np.empty_like(U)
    kernels.primitives(np.ascontiguousarray(U), np.ascontiguousarray(bathy_center, dtype=np.float64),
                       float(tau), float(eps * rho0), P)
    return P[:, :ncol]


def candidate_gradients(centers, mesh: TriMesh, diagnostics: Diagnostics | None = None):
    """Unlimited least-squares gradients from the three neighbor centers.

    Ghost neighbors across boundary edges carry the cell's own value.
    Returns an array (nc, ncomp, 2).
    """
    centers = np.asarray(centers, dtype=np.float64)
    squeeze = centers.ndim == 1
    if squeeze:
        centers = centers[:, None]
    nb = mesh.neighbors
    dy = np.where((nb >= 0)[..., None], centers[np.maximum(nb, 0)], centers[:, None, :]) - centers[:, None, :]
    g = np.einsum("jdk,jkc->jcd", mesh.lsq_w, dy)
    if diagnostics is not None:
        diagnostics.singular_gradients += int(np.count_nonzero(mesh.lsq_singular))
    return g[:, 0, :] if squeeze else g


def scaling_limiter(center, neighbor_values, raw_traces):
    """Scaling limiter for one component on a batch of cells.

    ``center`` (n,), ``neighbor_values`` (n,3), ``raw_traces`` (n,3).
    Returns ``theta`` (n,) and the corrected traces (n,3). An edge whose raw
    trace equals the center value imposes no constraint.
    """
    c = np.atleast_1d(np.asarray(center, dtype=np.float64))
    nv = np.atleast_2d(np.asarray(neighbor_values, dtype=np.float64))
    tr = np.atleast_2d(np.asarray(raw_traces, dtype=np.float64))
    d = tr - c[:, None]
    lo = np.minimum(c[:, None], nv) - c[:, None]
    hi = np.maximum(c[:, None], nv) - c[:, None]
    nz = d != 0.0
    ds = np.where(nz, d, 1.0)
    r = np.where(nz, np.maximum(lo / ds, hi / ds), np.inf)
    theta = np.minimum(r.min(axis=1), 1.0)
    return theta, c[:, None] + theta[:, None] * d


def limited_reconstruction(centers, mesh: TriMesh, mixed=None, cells=None) -> PrimitiveReconstruction:
    """Gradients and traces of all six columns, limited per component.

    Single-fluid cells see a mixed neighbor as carrying their own flow values;
    mixed cells get zero flow gradients (their traces come from the Riemann
    treatment).
    """
    P = np.ascontiguousarray(centers, dtype=np.float64)
    nc = mesh.n_cells
    if mixed is None:
        mixed = np.zeros(nc, dtype=np.uint8)
    mixed = np.ascontiguousarray(mixed, dtype=np.uint8)
    if cells is None:
        cells = np.arange(nc, dtype=np.int64)
    G = np.zeros((nc, NCOMP, 2))
    T = np.zeros((nc, 3, NCOMP))
    kernels.reconstruct(P, mixed, np.ascontiguousarray(cells, dtype=np.int64), mesh.neighbors,
                        mesh.lsq_w, mesh.mid_off, G, T)
    return PrimitiveReconstruction(P, G, T, Diagnostics(int(np.count_nonzero(mesh.lsq_singular))))


def edge_traces(traces, bathy: Bathymetry, strict: bool = True):
    """Conserved traces (w, hu, hv, h*rho) at edge midpoints from primitive traces.

    ``traces`` has shape (nc, 3, >=4). Depth traces below -DRY_TOL raise when
    ``strict``; tiny negative depths are clipped to zero.
    """
    tr = np.asarray(traces, dtype=np.float64)
    h = tr[..., W] - bathy.midpoint
    if strict and np.any(h < -DRY_TOL):
        j, k = np.argwhere(h < -DRY_TOL)[0]
        raise PositivityError(f"negative depth trace {h[j, k]:.3e} at cell {j} edge {k}")
    h = np.maximum(h, 0.0)
    out = np.empty(tr.shape[:-1] + (4,))
    out[..., 0] = tr[..., W]
    out[..., 1] = h * tr[..., U]
    out[..., 2] = h * tr[..., V]
    out[..., 3] = h * tr[..., RHO]
    return out
