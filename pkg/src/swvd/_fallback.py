"""Pure NumPy versions of the hot kernels.

Same signatures and output arrays as the compiled ``_kernels`` module; used
when the extension is unavailable and as a reference in tests.
"""
import numpy as np

NCOMP = 6


def primitives(U, Bc, tau, rho_floor, P):
    """Desingularized center values (w, u, v, rho, phi, f) of conserved U."""
    w = U[:, 0]
    h = np.maximum(w - Bc, 0.0)
    h2 = h * h
    wet = h2 >= tau
    hs = np.where(wet, h, 1.0)
    den = h2 + np.maximum(h2, tau)
    den = np.where(den > 0, den, 1.0)
    P[:, 0] = w
    for c in (1, 2, 3):
        P[:, c] = np.where(wet, U[:, c] / hs, 2.0 * h * U[:, c] / den)
    P[:, 3] = np.where(wet, P[:, 3], np.maximum(P[:, 3], rho_floor))
    P[:, 4] = U[:, 4]
    P[:, 5] = U[:, 5]
    return P


def reconstruct(P, mixed, cells, nbr, lsq_w, mid_off, G, T):
    """Least-squares gradients limited per component; writes G (nc,6,2) and T (nc,3,6)."""
    cells = np.asarray(cells, dtype=np.int64)
    if len(cells) == 0:
        return 0
    Pj = P[cells]                                   # (m,6)
    nb = nbr[cells]                                 # (m,3)
    Pn = P[np.maximum(nb, 0)]                       # (m,3,6)
    own = (nb < 0)[..., None] | np.zeros((1, 1, NCOMP), dtype=bool)
    mj = mixed[cells].astype(bool)
    mn = mixed[np.maximum(nb, 0)].astype(bool) & (nb >= 0)
    flow = np.zeros(NCOMP, dtype=bool)
    flow[:4] = True
    own |= (mn & ~mj[:, None])[..., None] & flow[None, None, :]
    Yn = np.where(own, Pj[:, None, :], Pn)
    dY = Yn - Pj[:, None, :]                        # (m,3,6)
    W = lsq_w[cells]                                # (m,2,3)
    g = np.einsum("mdk,mkc->mcd", W, dY)            # (m,6,2)
    mo = mid_off[cells]                             # (m,3,2)
    d = np.einsum("mcd,mkd->mkc", g, mo)            # raw trace - center
    lo = np.minimum(dY, 0.0)
    hi = np.maximum(dY, 0.0)
    nz = d != 0.0
    ds = np.where(nz, d, 1.0)
    r = np.where(nz, np.maximum(lo / ds, hi / ds), np.inf)
    theta = np.minimum(r.min(axis=1), 1.0)           # (m,6)
    theta = np.where(mj[:, None] & flow[None, :], 0.0, theta)
    G[cells] = g * theta[..., None]
    T[cells] = Pj[:, None, :] + theta[:, None, :] * d
    return 0


def fluxes(P, T, G, cells, nbr, nbr_edge, elen, normals, area, vert_off, Bm, Bv,
           g, rho0, sigma, ratio, dU, amax, Hedge, store_edge):
    """Central-upwind fluxes, well-balanced source and scalar transport for ``cells``."""
    cells = np.asarray(cells, dtype=np.int64)
    if len(cells) == 0:
        return 0
    nb = nbr[cells]
    ne = nbr_edge[cells]
    TL = T[cells]                                   # (m,3,6)
    TR = T[np.maximum(nb, 0), np.maximum(ne, 0)]
    TR = np.where((nb >= 0)[..., None], TR, TL)
    B = Bm[cells]
    hL_raw = TL[..., 0] - B
    hR_raw = TR[..., 0] - B
    nclip = int(np.count_nonzero(hL_raw < 0))
    hL = np.maximum(hL_raw, 0.0)
    hR = np.maximum(hR_raw, 0.0)
    cs = normals[cells, :, 0]
    sn = normals[cells, :, 1]
    ell = elen[cells]
    gr = g / rho0

    def cons(Tr, h):
        return np.stack([Tr[..., 0], h * Tr[..., 1], h * Tr[..., 2], h * Tr[..., 3]], axis=-1)

    def flx(Tr, h):
        u, v, r = Tr[..., 1], Tr[..., 2], Tr[..., 3]
        hu, hv = h * u, h * v
        p = 0.5 * gr * r * h * h
        F = np.stack([hu, hu * u + p, hu * v, hu * r], axis=-1)
        Gf = np.stack([hv, hv * u, hv * v + p, hv * r], axis=-1)
        return F, Gf

    UL, UR = cons(TL, hL), cons(TR, hR)
    FL, GL = flx(TL, hL)
    FR, GR = flx(TR, hR)
    unL = TL[..., 1] * cs + TL[..., 2] * sn
    unR = TR[..., 1] * cs + TR[..., 2] * sn
    cL = np.sqrt(gr * hL * TL[..., 3])
    cR = np.sqrt(gr * hR * TR[..., 3])
    ain = -np.minimum(np.minimum(unL - cL, unR - cR), 0.0)
    aout = np.maximum(np.maximum(unL + cL, unR + cR), 0.0)
    asum = ain + aout
    big = asum >= sigma
    fac = np.where(big, ell / np.where(big, asum, 1.0), 0.0)[..., None]
    Hc = fac * (cs[..., None] * (ain[..., None] * FR + aout[..., None] * FL)
                + sn[..., None] * (ain[..., None] * GR + aout[..., None] * GL)) \
        - fac * (ain * aout)[..., None] * (UR - UL)
    half = (0.5 * ell)[..., None]
    Hs = half * (cs[..., None] * (FL + FR) + sn[..., None] * (GL + GR))
    H = np.where(big[..., None], Hc, Hs)

    # scalar transport (phi, f) with speeds from the normal velocities
    qin = -np.minimum(np.minimum(unL, unR), 0.0)
    qout = np.maximum(np.maximum(unL, unR), 0.0)
    qsum = qin + qout
    qbig = qsum >= sigma
    qf = np.where(qbig, ell / np.where(qbig, qsum, 1.0), 0.0)
    Hq = np.empty(TL.shape[:2] + (2,))
    for i, c in enumerate((4, 5)):
        qL, qR = TL[..., c], TR[..., c]
        Hq[..., i] = np.where(qbig, qf * (qin * qR * unR + qout * qL * unL) - qf * qin * qout * (qR - qL),
                              0.5 * ell * (qR * unR + qL * unL))
    Dq = np.where(qbig, qf * (qin * unR + qout * unL), 0.5 * ell * (unR + unL)).sum(axis=1)

    a = area[cells]
    out = np.empty((len(cells), NCOMP))
    out[:, :4] = -H.sum(axis=1) / a[:, None]
    out[:, 4:] = (-Hq.sum(axis=1) + P[cells, 4:] * Dq[:, None]) / a[:, None]

    # well-balanced source
    rh2 = TL[..., 3] * hL * hL * ratio
    sb2 = (ell * cs * rh2).sum(axis=1)
    sb3 = (ell * sn * rh2).sum(axis=1)
    Gw = G[cells, 0]
    Gr = G[cells, 3]
    vo = vert_off[cells]
    wk = P[cells, 0][:, None] + np.einsum("md,mkd->mk", Gw, vo)
    rk = P[cells, 3][:, None] + np.einsum("md,mkd->mk", Gr, vo)
    hk = wk - Bv[cells]
    t1 = (rk * hk).sum(axis=1)
    t2 = (hk * hk).sum(axis=1)
    out[:, 1] += 0.5 * g * sb2 / (a * rho0) - g / (3.0 * rho0) * t1 * Gw[:, 0] - g / (6.0 * rho0) * Gr[:, 0] * t2
    out[:, 2] += 0.5 * g * sb3 / (a * rho0) - g / (3.0 * rho0) * t1 * Gw[:, 1] - g / (6.0 * rho0) * Gr[:, 1] * t2
    dU[cells] = out
    amax[cells] = np.maximum(ain, aout).max(axis=1)
    if store_edge:
        Hedge[cells] = H
    return nclip
