import numpy as np
import pytest

from swvd.errors import InterfaceTooWideError
from swvd.mesh import build_uniform
from swvd.riemann import (MixedTraces, RotatedState, find_flanking_singles, riemann_intermediates,
                          rotate_in, rotate_out, sample_origin, select_right)

G, R0 = 1.0, 997.0


def state(w, u, v, rho, B=0.0):
    a = lambda x: np.atleast_1d(np.asarray(x, dtype=np.float64))
    return RotatedState(a(w), a(u), a(v), a(rho), a(B))


def test_rotation_roundtrip(rng):
    u, v = rng.normal(size=(2, 20))
    th = rng.uniform(0, 2 * np.pi, 20)
    up, vp = rotate_in(u, v, np.cos(th), np.sin(th))
    assert np.allclose(np.hypot(up, vp), np.hypot(u, v))
    u2, v2 = rotate_out(up, vp, np.cos(th), np.sin(th))
    assert np.allclose(u2, u) and np.allclose(v2, v)


def test_identical_states_star_is_state():
    L = state(1.5, 0.2, -0.1, 1200.0)
    pair = riemann_intermediates(L, L, G, R0)
    assert pair.s_star[0] == pytest.approx(0.2, rel=1e-14)
    assert pair.right.w[0] == pytest.approx(1.5, rel=1e-14)
    assert not pair.vacuum[0]


def test_pressure_balanced_density_jump_is_steady():
    L = state(3.0, 0.0, 0.0, 4.0 / 3.0 * R0)
    Rs = state(2.0, 0.0, 0.0, 3.0 * R0)
    pair = riemann_intermediates(L, Rs, G, R0)
    assert pair.s_star[0] == 0.0
    assert pair.left.w[0] == 3.0 and pair.right.w[0] == 2.0
    out, use = select_right(pair, Rs, G, R0)
    assert use[0]
    assert np.array_equal(out[0], [2.0, 0.0, 0.0, 3.0 * R0])


def test_bed_step_lake_at_rest():
    L = state(1.0, 0.0, 0.0, R0, B=0.0)
    Rs = state(1.0, 0.0, 0.0, R0, B=0.2)
    pair = riemann_intermediates(L, Rs, G, R0)
    assert abs(pair.s_star[0]) < 1e-15
    assert pair.right.w[0] == pytest.approx(1.0, abs=1e-15)


def test_receding_states_flag_vacuum_or_stay_dry_safe():
    L = state(0.1, -5.0, 0.0, R0)
    Rs = state(0.1, 5.0, 0.0, R0)
    pair = riemann_intermediates(L, Rs, G, R0)
    assert pair.vacuum[0] or (pair.left.h[0] >= 0 and pair.right.h[0] >= 0)
    out, use = select_right(pair, Rs, G, R0)
    if pair.vacuum[0]:
        assert not use[0] and out[0, 0] == 0.1


def test_sample_origin_supersonic():
    L = state(1.0, 10.0, 0.0, R0)
    Rs = state(1.0, 10.0, 0.0, R0)
    pair = riemann_intermediates(L, Rs, G, R0)
    assert np.allclose(sample_origin(pair, L, Rs)[0], [1.0, 10.0, 0.0, R0])


def _vertical_interface(n=10):
    m = build_uniform(n, n, (-1, 1, -1, 1))
    x = m.vertices[m.cells][..., 0]
    mixed = (x.min(axis=1) < 0.05) & (x.max(axis=1) > 0.05)
    return m, mixed


def test_flanking_cells_on_correct_sides():
    m, mixed = _vertical_interface()
    j = int(np.nonzero(mixed)[0][5])
    for k in range(3):
        if m.neighbors[j, k] < 0:
            continue
        tl, tr = find_flanking_singles(m, mixed, j, k)
        n, M = m.normals[j, k], m.midpoints[j, k]
        assert (m.bary[tl] - M) @ n < 0
        assert not mixed[tl]
        if tr >= 0:
            assert (m.bary[tr] - M) @ n > 0
            assert not mixed[tr]


def test_mixed_traces_keep_pressure_balanced_state():
    m, mixed = _vertical_interface()
    left = m.bary[:, 0] < 0.05
    P = np.zeros((m.n_cells, 6))
    P[:, 0] = np.where(left, 3.0, 2.0)
    P[:, 3] = np.where(left, 4.0 / 3.0 * R0, 3.0 * R0)
    T = np.repeat(P[:, None, :], 3, axis=1).copy()
    mt = MixedTraces(m, mixed)
    mt.apply(P, np.zeros(m.n_cells), T, G, R0)
    h2rho = (T[..., 0] ** 2 * T[..., 3])[mixed]
    assert np.allclose(h2rho, 12.0 * R0, rtol=1e-15)
    assert np.all(T[mixed][..., 1:3] == 0.0)


def test_interface_too_wide():
    m = build_uniform(4, 4, (-1, 1, -1, 1))
    mixed = np.ones(m.n_cells, dtype=bool)
    mixed[0] = False
    with pytest.raises(InterfaceTooWideError):
        MixedTraces(m, mixed)
