import numpy as np
import pytest

from swvd.config import ScenarioConfig
from swvd.driver import Simulation, run
from swvd.interface import MIXED


def test_zero_end_time_writes_initial_snapshot_only(tmp_path):
    sim, rep = run(ScenarioConfig(nx=8, ny=8, t_end=0.0), out_dir=tmp_path)
    assert rep.steps == 0
    assert len(rep.snapshots) == 1


def test_snapshot_cadence(tmp_path):
    sim, rep = run(ScenarioConfig(nx=10, ny=10, t_end=0.01, snapshots=2), out_dir=tmp_path)
    assert len(rep.snapshots) == 3
    assert rep.t_final == pytest.approx(0.01)


def test_max_steps_cap(tmp_path):
    sim, rep = run(ScenarioConfig(nx=10, ny=10, max_steps=3), out_dir=tmp_path)
    assert rep.steps == 3 and len(rep.snapshots) == 2


def test_initial_state_example1():
    sim = Simulation(ScenarioConfig(nx=20, ny=20, t_end=0.0))
    r = np.hypot(*sim.mesh.bary.T)
    single = sim.iface.cls != MIXED
    inner = single & (r < 0.6)
    outer = single & (r > 0.8)
    assert np.all(sim.U[inner, 0] == 2.0) and np.all(sim.U[outer, 0] == 1.0)
    assert np.allclose(sim.U[inner, 3], 2.0 * 1.5 * 997)
    assert (sim.mesh.area * sim.U[:, 5]).sum() == pytest.approx(np.pi * 0.5, rel=1e-2)


def test_adaptive_run_is_deterministic(tmp_path):
    cfg = ScenarioConfig(nx=10, ny=10, max_level=1, t_end=0.01)
    a, _ = run(cfg, out_dir=tmp_path / "a")
    b, _ = run(cfg, out_dir=tmp_path / "b")
    fa = sorted((tmp_path / "a").iterdir())[-1].read_bytes()
    fb = sorted((tmp_path / "b").iterdir())[-1].read_bytes()
    assert fa == fb
    assert a.mesh.n_cells > 200


def test_adaptive_example2_flat_stays_at_rest():
    sim, rep = run(ScenarioConfig(scenario="example2", bathymetry="flat", nx=12, ny=12,
                                  max_level=1, t_end=0.02))
    single = sim.iface.cls != MIXED
    w0 = np.where(sim.iface.cls == 1, 3.0, 2.0)
    assert np.abs(sim.U[single, 0] - w0[single]).max() <= 1e-10
