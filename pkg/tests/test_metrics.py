import numpy as np
import pytest

from swvd.errors import ReportError
from swvd.mesh import build_uniform
from swvd.metrics import convergence_rates, l1_error


def test_restriction_gives_zero():
    fine = build_uniform(8, 8, (-1, 1, -1, 1))
    coarse = build_uniform(4, 4, (-1, 1, -1, 1))
    U_ref = np.ones((fine.n_cells, 4))
    e = l1_error(np.ones((coarse.n_cells, 4)), coarse, U_ref, fine)
    assert all(v == 0.0 for v in e.values())


def test_constant_offset():
    fine = build_uniform(8, 8, (-1, 1, -1, 1))
    coarse = build_uniform(4, 4, (-1, 1, -1, 1))
    e = l1_error(np.full((coarse.n_cells, 4), 1.25), coarse, np.ones((fine.n_cells, 4)), fine)
    assert e["w"] == pytest.approx(0.25 * 4.0)


def test_missing_reference():
    m = build_uniform(2, 2)
    with pytest.raises(ReportError):
        l1_error(np.zeros((m.n_cells, 4)), m, None, None)


def test_rates():
    assert convergence_rates([0.4, 0.2, 0.05]) == pytest.approx([1.0, 2.0])
