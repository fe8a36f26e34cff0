import numpy as np
import pytest

from swvd.config import ScenarioConfig
from swvd.driver import Simulation
from swvd.io import SnapshotIOError, read_csv, snapshot_table, write_csv, write_vtk


@pytest.fixture(scope="module")
def sim():
    return Simulation(ScenarioConfig(nx=10, ny=10, t_end=0.0))


def test_csv_roundtrip_full_precision(sim, tmp_path):
    tab = snapshot_table(sim)
    p = tmp_path / "s.csv"
    write_csv(tab, p)
    back = read_csv(p)
    assert len(back["id"]) == sim.mesh.n_cells
    for c in ("x", "y", "w", "hu", "hrho", "rho", "phi", "f"):
        assert np.array_equal(back[c], np.asarray(tab[c], dtype=float))
    mixed = back["class"] == "mixed"
    assert mixed.any() and np.all(np.isfinite(back["i1x"][mixed]))
    assert np.all(np.isnan(back["i1x"][~mixed]))


def test_two_cell_mesh(tmp_path):
    from types import SimpleNamespace
    tab = {c: np.zeros(2) for c in ("x", "y", "w", "hu", "hv", "hrho", "rho", "phi", "f",
                                    "i1x", "i1y", "i2x", "i2y")}
    tab.update(id=np.arange(2), level=np.zeros(2, dtype=int), **{"class": np.array([1, 2])})
    p = tmp_path / "two.csv"
    write_csv(tab, p)
    assert len(p.read_text().strip().splitlines()) == 3


def test_vtk_structure(sim, tmp_path):
    p = tmp_path / "s.vtk"
    write_vtk(sim.mesh, snapshot_table(sim), p)
    lines = p.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2] == "ASCII" and lines[3] == "DATASET UNSTRUCTURED_GRID"
    nv, nc = sim.mesh.n_vertices, sim.mesh.n_cells
    i = lines.index(f"POINTS {nv} double")
    j = lines.index(f"CELLS {nc} {4 * nc}")
    assert j == i + nv + 1
    k = lines.index(f"CELL_TYPES {nc}")
    assert all(l == "5" for l in lines[k + 1:k + 1 + nc])
    assert f"CELL_DATA {nc}" in lines
    for name in ("w", "hu", "hv", "hrho", "rho", "phi", "f", "level", "class"):
        s = [l for l in lines if l.startswith(f"SCALARS {name} ")]
        assert len(s) == 1


def test_vtk_readable_by_independent_reader(sim, tmp_path):
    meshio = pytest.importorskip("meshio")
    p = tmp_path / "s.vtk"
    write_vtk(sim.mesh, snapshot_table(sim), p)
    m = meshio.read(p)
    assert m.cells[0].data.shape == (sim.mesh.n_cells, 3)
    assert np.array_equal(np.ravel(m.cell_data["w"][0]), sim.U[:, 0])


def test_unwritable_path(sim, tmp_path):
    with pytest.raises(SnapshotIOError):
        write_csv(snapshot_table(sim), tmp_path / "missing" / "dir" / "s.csv")
