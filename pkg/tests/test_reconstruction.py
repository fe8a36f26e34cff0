import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swvd.errors import PositivityError
from swvd.mesh import build_uniform, sample_bathymetry
from swvd.reconstruction import (candidate_gradients, desingularization_tau, edge_traces,
                                 limited_reconstruction, primitive_centers, scaling_limiter)


def test_primitives_exact_quotients_when_deep():
    U = np.array([[2.0, 0.3, -0.1, 1500.0]])
    P = primitive_centers(U, np.array([0.5]), tau=1e-8, eps=1e-4, rho0=997.0)
    assert np.allclose(P[0], [2.0, 0.2, -0.1 / 1.5, 1000.0])


def test_primitives_desingularized_when_shallow():
    h, tau = 1e-5, 1e-6
    U = np.array([[h, 1e-7, 0.0, 0.0]])
    P = primitive_centers(U, np.zeros(1), tau=tau, eps=1e-4, rho0=997.0)
    assert P[0, 1] == pytest.approx(2 * h * 1e-7 / (h * h + tau))
    assert P[0, 3] == pytest.approx(1e-4 * 997.0)


def test_tau_is_max_area_squared(square):
    assert desingularization_tau(square) == pytest.approx((4.0 / 128) ** 2)


def test_gradient_exact_for_linear_interior(square):
    c = 1.0 + 2.0 * square.bary[:, 0] - 3.0 * square.bary[:, 1]
    g = candidate_gradients(c, square)
    interior = np.all(square.neighbors >= 0, axis=1)
    assert np.allclose(g[interior], [2.0, -3.0])


def test_linear_data_not_limited_interior(square):
    P = np.zeros((square.n_cells, 6))
    P[:, 0] = 1.0 + 0.5 * square.bary[:, 0]
    P[:, 3] = 1000.0
    rec = limited_reconstruction(P, square)
    interior = np.all(square.neighbors >= 0, axis=1)
    assert np.allclose(rec.gradients[interior, 0], [0.5, 0.0])
    expect = P[:, None, 0] + 0.5 * square.mid_off[..., 0]
    assert np.allclose(rec.traces[interior, :, 0], expect[interior])


def test_traces_stay_between_neighbor_values(square, rng):
    P = rng.normal(size=(square.n_cells, 6))
    rec = limited_reconstruction(P, square)
    nb = square.neighbors
    nbv = np.where((nb >= 0)[..., None], P[np.maximum(nb, 0)], P[:, None, :])
    lo = np.minimum(P[:, None, :], nbv.min(axis=1, keepdims=True))
    hi = np.maximum(P[:, None, :], nbv.max(axis=1, keepdims=True))
    assert np.all(rec.traces >= lo - 1e-13)
    assert np.all(rec.traces <= hi + 1e-13)


def test_mixed_cell_has_flat_flow_reconstruction(square, rng):
    P = rng.normal(size=(square.n_cells, 6))
    mixed = np.zeros(square.n_cells, dtype=np.uint8)
    mixed[40] = 1
    rec = limited_reconstruction(P, square, mixed)
    assert np.all(rec.gradients[40, :4] == 0.0)


def test_edge_traces_conserved_and_strict(square):
    b = sample_bathymetry(lambda x, y: 0.0 * x, square)
    T = np.zeros((square.n_cells, 3, 6))
    T[..., 0] = 2.0
    T[..., 1] = 0.5
    T[..., 3] = 1000.0
    C = edge_traces(T, b)
    assert np.allclose(C[..., 1], 1.0)
    assert np.allclose(C[..., 3], 2000.0)
    T[0, 0, 0] = -1.0
    with pytest.raises(PositivityError):
        edge_traces(T, b)


values = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(c=values, nbrs=st.lists(values, min_size=3, max_size=3),
       raw=st.lists(values, min_size=3, max_size=3))
def test_limiter_properties(c, nbrs, raw):
    theta, tr = scaling_limiter(np.array([c]), np.array([nbrs]), np.array([raw]))
    lo, hi = min(c, *nbrs), max(c, *nbrs)
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    assert 0.0 <= theta[0] <= 1.0
    assert np.all(tr >= lo - tol) and np.all(tr <= hi + tol)
    if all(min(c, n) <= r <= max(c, n) for n, r in zip(nbrs, raw)):
        assert theta[0] == 1.0


def test_kernel_backends_agree(rng):
    from swvd.kernels import get_backend
    try:
        ck = get_backend("cython")
    except ImportError:
        pytest.skip("compiled kernels not built")
    nk = get_backend("numpy")
    m = build_uniform(12, 12, (-1, 1, -1, 1))
    b = sample_bathymetry(lambda x, y: 0.2 * np.exp(-4 * (x * x + y * y)), m)
    U = np.zeros((m.n_cells, 6))
    U[:, 0] = 1.0 + 0.1 * rng.random(m.n_cells)
    h = U[:, 0] - b.center
    U[:, 1] = h * rng.normal(scale=0.2, size=m.n_cells)
    U[:, 2] = h * rng.normal(scale=0.2, size=m.n_cells)
    U[:, 3] = h * 997.0 * (1 + 0.5 * rng.random(m.n_cells))
    U[:, 4] = rng.normal(size=m.n_cells)
    U[:, 5] = rng.random(m.n_cells)
    from swvd.cu import PhysicsParams, SpatialOperator
    out = []
    for k in (ck, nk):
        op = SpatialOperator(m, b, PhysicsParams())
        op.k = k
        out.append((op.rhs(U, store_edge=True).copy(), op.amax.copy(), op.Hedge.copy()))
    for a, c in zip(out[0], out[1]):
        assert np.allclose(a, c, rtol=1e-12, atol=1e-12 * np.abs(c).max())
