import numpy as np
import pytest

from swvd.mesh import build_uniform, sample_bathymetry
from swvd.scenarios import two_humps


@pytest.fixture
def square():
    return build_uniform(8, 8, (-1.0, 1.0, -1.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def humps_mesh():
    m = build_uniform(20, 20, (-1.0, 1.0, -1.0, 1.0))
    return m, sample_bathymetry(two_humps, m)


ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    """Store and print one pass/fail line for an acceptance criterion."""
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
