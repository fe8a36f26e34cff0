# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: primitives, limited reconstruction, fluxes and source.

Loops run over cells and write only per-cell outputs, so results do not
depend on the number of threads.
"""
from cython.parallel cimport prange
from libc.math cimport sqrt

import numpy as np

DEF NC = 6


cdef int _nthreads = 1


def set_num_threads(int n):
    global _nthreads
    _nthreads = n if n > 0 else 1


def get_num_threads():
    return _nthreads


def primitives(double[:, ::1] U, double[::1] Bc, double tau, double rho_floor,
               double[:, ::1] P):
    cdef Py_ssize_t j, n = U.shape[0]
    cdef double h, h2, den
    for j in prange(n, nogil=True, num_threads=_nthreads, schedule="static"):
        h = U[j, 0] - Bc[j]
        if h < 0.0:
            h = 0.0
        h2 = h * h
        P[j, 0] = U[j, 0]
        if h2 >= tau:
            P[j, 1] = U[j, 1] / h
            P[j, 2] = U[j, 2] / h
            P[j, 3] = U[j, 3] / h
        else:
            den = h2 + tau
            if den > 0.0:
                P[j, 1] = 2.0 * h * U[j, 1] / den
                P[j, 2] = 2.0 * h * U[j, 2] / den
                P[j, 3] = 2.0 * h * U[j, 3] / den
            else:
                P[j, 1] = 0.0
                P[j, 2] = 0.0
                P[j, 3] = 0.0
            if P[j, 3] < rho_floor:
                P[j, 3] = rho_floor
        P[j, 4] = U[j, 4]
        P[j, 5] = U[j, 5]
    return P


cdef inline void _recon_cell(Py_ssize_t j, double[:, ::1] P, unsigned char[::1] mixed,
                             long[:, ::1] nbr, double[:, :, ::1] lsq_w,
                             double[:, :, ::1] mid_off, double[:, :, ::1] G,
                             double[:, :, ::1] T) noexcept nogil:
    cdef Py_ssize_t k, c, nb
    cdef double y0, gx, gy, th, d, lo, hi, r, a, b
    cdef double dy[3]
    cdef double dd[3]
    cdef bint mj = mixed[j] != 0
    for c in range(NC):
        y0 = P[j, c]
        if mj and c < 4:
            G[j, c, 0] = 0.0
            G[j, c, 1] = 0.0
            for k in range(3):
                T[j, k, c] = y0
            continue
        for k in range(3):
            nb = nbr[j, k]
            if nb < 0:
                dy[k] = 0.0
            elif c < 4 and mixed[nb] != 0:
                dy[k] = 0.0
            else:
                dy[k] = P[nb, c] - y0
        gx = lsq_w[j, 0, 0] * dy[0] + lsq_w[j, 0, 1] * dy[1] + lsq_w[j, 0, 2] * dy[2]
        gy = lsq_w[j, 1, 0] * dy[0] + lsq_w[j, 1, 1] * dy[1] + lsq_w[j, 1, 2] * dy[2]
        th = 1.0
        for k in range(3):
            d = gx * mid_off[j, k, 0] + gy * mid_off[j, k, 1]
            dd[k] = d
            if d != 0.0:
                lo = dy[k] if dy[k] < 0.0 else 0.0
                hi = dy[k] if dy[k] > 0.0 else 0.0
                a = lo / d
                b = hi / d
                r = a if a > b else b
                if r < th:
                    th = r
        G[j, c, 0] = th * gx
        G[j, c, 1] = th * gy
        for k in range(3):
            T[j, k, c] = y0 + th * dd[k]


def reconstruct(double[:, ::1] P, unsigned char[::1] mixed, long[::1] cells,
                long[:, ::1] nbr, double[:, :, ::1] lsq_w, double[:, :, ::1] mid_off,
                double[:, :, ::1] G, double[:, :, ::1] T):
    cdef Py_ssize_t m = cells.shape[0]
    cdef Py_ssize_t i
    for i in prange(m, nogil=True, num_threads=_nthreads, schedule="static"):
        _recon_cell(cells[i], P, mixed, nbr, lsq_w, mid_off, G, T)
    return 0


cdef long _flux_cell(Py_ssize_t j, double[:, ::1] P, double[:, :, ::1] T, double[:, :, ::1] G,
                     long[:, ::1] nbr, long[:, ::1] nbr_edge, double[:, ::1] elen,
                     double[:, :, ::1] normals, double[::1] area, double[:, :, ::1] vert_off,
                     double[:, ::1] Bm, double[:, ::1] Bv, double g, double rho0, double sigma,
                     double ratio, double[:, ::1] dU, double[::1] amax, double[:, :, ::1] Hedge,
                     bint store_edge) noexcept nogil:
    cdef Py_ssize_t k, c, nb, ke = 0
    cdef double gr = g / rho0
    cdef double cs, sn, ell, B, hL, hR, uL, vL, rL, uR, vR, rR, wL, wR
    cdef double unL, unR, cL, cR, ain, aout, asum, fac, lo, hi
    cdef double huL, hvL, huR, hvR, pL, pR
    cdef double qin, qout, qsum, qf = 0.0, qL, qR
    cdef double Dq = 0.0, sb2 = 0.0, sb3 = 0.0, t1 = 0.0, t2 = 0.0
    cdef double wk, rk, hk, a, wx, wy, rx, ry, am = 0.0
    cdef double FL[4]
    cdef double FR[4]
    cdef double GL[4]
    cdef double GR[4]
    cdef double UL[4]
    cdef double UR[4]
    cdef double H[4]
    cdef double acc[NC]
    cdef long nclip = 0
    for c in range(NC):
        acc[c] = 0.0
    for k in range(3):
        nb = nbr[j, k]
        cs = normals[j, k, 0]
        sn = normals[j, k, 1]
        ell = elen[j, k]
        B = Bm[j, k]
        wL = T[j, k, 0]
        uL = T[j, k, 1]
        vL = T[j, k, 2]
        rL = T[j, k, 3]
        if nb >= 0:
            ke = nbr_edge[j, k]
            wR = T[nb, ke, 0]
            uR = T[nb, ke, 1]
            vR = T[nb, ke, 2]
            rR = T[nb, ke, 3]
        else:
            wR = wL
            uR = uL
            vR = vL
            rR = rL
        hL = wL - B
        if hL < 0.0:
            hL = 0.0
            nclip += 1
        hR = wR - B
        if hR < 0.0:
            hR = 0.0
        huL = hL * uL
        hvL = hL * vL
        huR = hR * uR
        hvR = hR * vR
        pL = 0.5 * gr * rL * hL * hL
        pR = 0.5 * gr * rR * hR * hR
        UL[0] = wL
        UL[1] = huL
        UL[2] = hvL
        UL[3] = hL * rL
        UR[0] = wR
        UR[1] = huR
        UR[2] = hvR
        UR[3] = hR * rR
        FL[0] = huL
        FL[1] = huL * uL + pL
        FL[2] = huL * vL
        FL[3] = huL * rL
        GL[0] = hvL
        GL[1] = hvL * uL
        GL[2] = hvL * vL + pL
        GL[3] = hvL * rL
        FR[0] = huR
        FR[1] = huR * uR + pR
        FR[2] = huR * vR
        FR[3] = huR * rR
        GR[0] = hvR
        GR[1] = hvR * uR
        GR[2] = hvR * vR + pR
        GR[3] = hvR * rR
        unL = uL * cs + vL * sn
        unR = uR * cs + vR * sn
        cL = sqrt(gr * hL * rL)
        cR = sqrt(gr * hR * rR)
        lo = unL - cL
        if unR - cR < lo:
            lo = unR - cR
        if lo > 0.0:
            lo = 0.0
        ain = -lo
        hi = unL + cL
        if unR + cR > hi:
            hi = unR + cR
        if hi < 0.0:
            hi = 0.0
        aout = hi
        asum = ain + aout
        if ain > am:
            am = ain
        if aout > am:
            am = aout
        if asum >= sigma:
            fac = ell / asum
            for c in range(4):
                H[c] = fac * (cs * (ain * FR[c] + aout * FL[c]) + sn * (ain * GR[c] + aout * GL[c])) \
                    - fac * (ain * aout) * (UR[c] - UL[c])
        else:
            for c in range(4):
                H[c] = (0.5 * ell) * (cs * (FL[c] + FR[c]) + sn * (GL[c] + GR[c]))
        for c in range(4):
            acc[c] = acc[c] + H[c]
            if store_edge:
                Hedge[j, k, c] = H[c]
        # scalar transport with the normal velocity as the only wave speed
        lo = unL
        if unR < lo:
            lo = unR
        if lo > 0.0:
            lo = 0.0
        qin = -lo
        hi = unL
        if unR > hi:
            hi = unR
        if hi < 0.0:
            hi = 0.0
        qout = hi
        qsum = qin + qout
        if qsum >= sigma:
            qf = ell / qsum
            Dq = Dq + qf * (qin * unR + qout * unL)
        else:
            Dq = Dq + 0.5 * ell * (unR + unL)
        for c in range(4, NC):
            qL = T[j, k, c]
            if nb >= 0:
                qR = T[nb, ke, c]
            else:
                qR = qL
            if qsum >= sigma:
                acc[c] = acc[c] + (qf * (qin * qR * unR + qout * qL * unL) - qf * qin * qout * (qR - qL))
            else:
                acc[c] = acc[c] + 0.5 * ell * (qR * unR + qL * unL)
        # boundary part of the source quadrature
        sb2 = sb2 + ell * cs * (rL * hL * hL * ratio)
        sb3 = sb3 + ell * sn * (rL * hL * hL * ratio)
    a = area[j]
    wx = G[j, 0, 0]
    wy = G[j, 0, 1]
    rx = G[j, 3, 0]
    ry = G[j, 3, 1]
    for k in range(3):
        wk = P[j, 0] + (wx * vert_off[j, k, 0] + wy * vert_off[j, k, 1])
        rk = P[j, 3] + (rx * vert_off[j, k, 0] + ry * vert_off[j, k, 1])
        hk = wk - Bv[j, k]
        t1 = t1 + rk * hk
        t2 = t2 + hk * hk
    dU[j, 0] = -acc[0] / a
    dU[j, 1] = -acc[1] / a + (0.5 * g * sb2 / (a * rho0) - g / (3.0 * rho0) * t1 * wx - g / (6.0 * rho0) * rx * t2)
    dU[j, 2] = -acc[2] / a + (0.5 * g * sb3 / (a * rho0) - g / (3.0 * rho0) * t1 * wy - g / (6.0 * rho0) * ry * t2)
    dU[j, 3] = -acc[3] / a
    for c in range(4, NC):
        dU[j, c] = (-acc[c] + P[j, c] * Dq) / a
    amax[j] = am
    return nclip


def fluxes(double[:, ::1] P, double[:, :, ::1] T, double[:, :, ::1] G, long[::1] cells,
           long[:, ::1] nbr, long[:, ::1] nbr_edge, double[:, ::1] elen,
           double[:, :, ::1] normals, double[::1] area, double[:, :, ::1] vert_off,
           double[:, ::1] Bm, double[:, ::1] Bv, double g, double rho0, double sigma,
           double ratio, double[:, ::1] dU, double[::1] amax, double[:, :, ::1] Hedge,
           bint store_edge):
    cdef Py_ssize_t m = cells.shape[0]
    cdef Py_ssize_t i
    cdef long nclip = 0
    for i in prange(m, nogil=True, num_threads=_nthreads, schedule="static"):
        nclip += _flux_cell(cells[i], P, T, G, nbr, nbr_edge, elen, normals, area, vert_off,
                            Bm, Bv, g, rho0, sigma, ratio, dU, amax, Hedge, store_edge)
    return nclip
