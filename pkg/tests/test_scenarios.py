import numpy as np
import pytest

from swvd.config import ScenarioConfig
from swvd.scenarios import central_hump, circle_sdf, corner_sdf, make_scenario, two_humps


def test_example1_states():
    sc = make_scenario(ScenarioConfig())
    P = sc.primitive(np.array([0.0, 0.9]), np.array([0.0, 0.0]))
    assert np.allclose(P[0], [2, 0, 0, 1.5 * 997])
    assert np.allclose(P[1], [1, 0, 0, 997])


def test_example2_pressure_balance():
    sc = make_scenario(ScenarioConfig(scenario="example2"))
    assert sc.inside[0] ** 2 * sc.inside[3] == pytest.approx(sc.outside[0] ** 2 * sc.outside[3])


def test_example3_region():
    sc = make_scenario(ScenarioConfig(scenario="example3"))
    P = sc.primitive(np.array([-0.75, 0.5]), np.array([-0.25, 0.5]))
    assert np.allclose(P[0], [2, 0, 0, 997])
    assert np.allclose(P[1], [1, 0, 0, 1.5 * 997])


def test_corner_sdf_is_distance():
    assert corner_sdf(np.array([-0.75]), np.array([-0.25]))[0] == pytest.approx(0.25)
    assert corner_sdf(np.array([0.5]), np.array([0.5]))[0] < 0
    # arc part
    assert corner_sdf(np.array([-0.5 + 0.3 / np.sqrt(2)]),
                      np.array([-0.5 + 0.3 / np.sqrt(2)]))[0] == pytest.approx(0.2)


def test_bathymetries():
    assert two_humps(np.array([0.5]), np.array([0.5]))[0] == pytest.approx(0.6)
    assert two_humps(np.array([-0.5]), np.array([-0.5]))[0] == pytest.approx(0.5)
    assert central_hump(np.array([0.0]), np.array([0.0]))[0] == pytest.approx(0.5)
    assert circle_sdf(0, 0, 1)(np.array([0.0]), np.array([0.5]))[0] == pytest.approx(0.5)
