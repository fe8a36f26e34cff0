import numpy as np
import pytest

from swvd.amr import (COARSEN, KEEP, REFINE, WlrField, apply_flags, flag, interface_flags, project,
                      wlr_errors)
from swvd.errors import MeshError
from swvd.hierarchy import MeshHierarchy
from swvd.interface import FLUID1, MIXED
from swvd.mesh import build_uniform
from swvd.scenarios import two_humps


def tree(n=6, M=2, bfn=two_humps):
    base = build_uniform(n, n, (-1, 1, -1, 1))
    return MeshHierarchy(base, bfn, M)


def conforming(mesh):
    """Boundary edge length equals the square's perimeter iff there are no hanging nodes."""
    j, k = np.nonzero(mesh.neighbors < 0)
    return mesh.edge_len[j, k].sum()


def test_refine_single_cell_closure():
    h = tree()
    h.refine([14])
    am = h.active()
    assert am.mesh.area.sum() == pytest.approx(4.0, rel=1e-14)
    assert conforming(am.mesh) == pytest.approx(8.0, rel=1e-14)
    assert am.mesh.n_cells > 72
    assert set(np.unique(am.tree_level)) == {0, 1}


def test_random_refinement_conserves_area(rng):
    h = tree(M=3)
    for _ in range(3):
        am = h.active()
        pick = rng.choice(am.mesh.n_cells, 10, replace=False)
        h.refine(np.unique(am.owner[pick]))
    am = h.active()
    assert am.mesh.area.sum() == pytest.approx(4.0, rel=1e-13)
    assert conforming(am.mesh) == pytest.approx(8.0, rel=1e-13)
    assert am.tree_level.max() <= 3


def test_max_level_respected():
    h = tree(M=1)
    h.refine([0])
    am = h.active()
    kid = am.owner[am.tree_level == 1][0]
    h.refine([kid])
    assert h.ignored_flags == 1


def test_coarsen_back_to_base():
    h = tree(M=2)
    h.refine(np.arange(72))
    am = h.active()
    assert am.mesh.n_cells == 4 * 72
    flags = np.full(am.mesh.n_cells, COARSEN, dtype=np.int8)
    apply_flags(h, am, flags)
    assert h.active().mesh.n_cells == 72


def test_active_keys_sorted_and_unique():
    h = tree()
    h.refine([3, 20, 40])
    am = h.active()
    k = am.keys
    assert np.all(np.diff(k) > 0)


def test_bathymetry_sampled_at_new_vertices():
    h = tree()
    h.refine([14])
    am = h.active()
    V = am.mesh.vertices
    assert np.array_equal(am.bathy.vertex, two_humps(V[:, 0], V[:, 1]))


def test_wlr_zero_on_lake_at_rest():
    m = build_uniform(10, 10, (-1, 1, -1, 1))
    U = np.zeros((m.n_cells, 6))
    U[:, 0] = 2.0
    U[:, 3] = 2.0 * 997.0
    w = wlr_errors(U, U.copy(), m, 1e-3)
    assert np.abs(w.e).max() <= 1e-12


def test_wlr_detects_jump():
    m = build_uniform(20, 20, (-1, 1, -1, 1))
    U0 = np.zeros((m.n_cells, 6))
    U0[:, 0] = np.where(m.bary[:, 0] < 0, 2.0, 1.0)
    U0[:, 3] = U0[:, 0] * 997.0
    U1 = U0.copy()
    near = np.abs(m.bary[:, 0]) < 0.1
    U1[near, 0] = 1.5
    w = wlr_errors(U0, U1, m, 1e-3)
    top = np.argsort(w.e)[-20:]
    assert np.all(np.abs(m.bary[top, 0]) < 0.3)


def test_flag_thresholds():
    e = np.array([0.0, 0.5e-3, 0.02, 1.0])
    w = WlrField(None, None, e, 1.0)
    fl = flag(w, 0.01, np.zeros(4, dtype=int), 1, 0.1)
    assert list(fl) == [COARSEN, COARSEN, REFINE, REFINE]
    fl = flag(w, 0.01, np.array([0, 0, 1, 1]), 1, 0.1)
    assert list(fl) == [COARSEN, COARSEN, KEEP, KEEP]
    fl = flag(WlrField(None, None, np.full(4, 1e-12), 1.0), 0.01, np.zeros(4), 1, floor=1e-9)
    assert np.all(fl == COARSEN)


def test_interface_flags_buffer():
    h = tree()
    am = h.active()
    cls = np.full(am.mesh.n_cells, FLUID1, dtype=np.int8)
    cls[30] = MIXED
    fl, prot = interface_flags(np.full(am.mesh.n_cells, COARSEN, dtype=np.int8), am, cls, 1)
    ring = set(am.mesh.neighbors[30][am.mesh.neighbors[30] >= 0]) | {30}
    assert set(np.nonzero(fl == REFINE)[0]) == ring
    assert set(np.nonzero(prot)[0]) == ring


def test_projection_preserves_lake_at_rest():
    h = tree(M=2)
    old = h.active()
    U = np.zeros((old.mesh.n_cells, 6))
    U[:, 0] = 2.0
    U[:, 3] = (2.0 - old.bathy.center) * 997.0
    h.refine(np.arange(0, 72, 5))
    new = h.active()
    V, _, st = project(h, old, U, new)
    assert np.all(V[:, 0] == 2.0)
    assert np.all(V[:, 1:3] == 0.0)
    assert st.copied > 0 and st.planes > 0


def test_projection_conserves_linear_refinement(rng):
    h = tree(M=1, bfn=lambda x, y: 0 * x)
    old = h.active()
    m = old.mesh
    U = np.zeros((m.n_cells, 6))
    U[:, 0] = 2.0 + 0.1 * m.bary[:, 0]
    U[:, 3] = 997.0 * U[:, 0]
    h.refine(np.arange(72))
    new = h.active()
    V, _, st = project(h, old, U, new)
    # quadrisection of every cell: planes integrate exactly
    assert np.abs(st.defect[0]) <= 1e-13
    assert (new.mesh.area * V[:, 0]).sum() == pytest.approx((m.area * U[:, 0]).sum(), rel=1e-14)


def test_negative_max_level():
    with pytest.raises(MeshError):
        MeshHierarchy(build_uniform(2, 2), two_humps, -1)
