import subprocess
import sys

import pytest

from swvd.bench import benchmark, convergence
from swvd.cli import main
from swvd.config import ScenarioConfig

SMALL = "scenario = example1-flat\nnx = 8\nny = 8\nt_end = 0.01\n"


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL)
    return p


def test_run(cfg, tmp_path, capsys):
    assert main(["run", str(cfg), "--out", str(tmp_path / "o"), "--format", "vtk",
                 "--snapshots", "1"]) == 0
    assert sorted(p.name for p in (tmp_path / "o").iterdir()) == ["snapshot_0000.vtk",
                                                                    "snapshot_0001.vtk"]
    assert "steps" in capsys.readouterr().out


def test_convergence(cfg, capsys):
    assert main(["convergence", str(cfg), "--levels", "4,8"]) == 0
    out = capsys.readouterr().out
    assert "reference: uniform 2x16x16" in out


def test_benchmark(cfg, capsys):
    assert main(["benchmark", str(cfg), "--levels", "1"]) == 0
    assert "R_CPU total" in capsys.readouterr().out


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.cfg")]) == 1
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "bad.cfg"
    bad.write_text("nx = -3\n")
    assert main(["run", str(bad)]) == 1
    with pytest.raises(SystemExit) as e:
        main(["convergence", str(bad), "--levels", "a,b"])
    assert e.value.code != 0


def test_entry_point_module(cfg):
    r = subprocess.run([sys.executable, "-m", "swvd.cli", "benchmark", str(cfg), "--levels", "0"],
                       capture_output=True, text=True)
    assert r.returncode == 1 and "refinement level" in r.stderr


def test_benchmark_and_convergence_api():
    cfg = ScenarioConfig(nx=4, ny=4, t_end=0.005)
    b = benchmark(cfg, 1)
    assert b.uniform_cells == 2 * 8 * 8 and b.r_cpu_total > 0
    c = convergence(cfg, [4, 8], reference=16)
    assert len(c.errors) == 2 and len(c.rates()) == 1
