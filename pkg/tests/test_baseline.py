import numpy as np
import pytest
from hypothesis import given, strategies as st

from widescan.array_model import ArrayGeometry, power_density
from widescan.baseline import ScanGrid, std_weights

from conftest import FREQ, make_model


def test_broadside_phases_are_zero():
    g = ArrayGeometry.linear(6, 0.5, FREQ)
    w = std_weights(g, (90.0, 0.0))
    assert np.allclose(w.phases_deg, 0, atol=1e-12)
    assert w.phase_only


def test_phase_step_at_thirty_degrees():
    g = ArrayGeometry.linear(4, 0.5, FREQ)
    w = std_weights(g, (90.0, 30.0)).w_plus
    step = np.angle(w[1:] / w[:-1])
    assert np.allclose(step, np.pi / 2)


@given(st.floats(0, 180), st.floats(-180, 180))
def test_magnitudes_are_unit(theta, phi):
    g = ArrayGeometry.planar(3, 2, 0.5, 0.5, FREQ)
    assert np.allclose(std_weights(g, (theta, phi)).magnitudes, 1.0)


def test_std_aligns_contributions():
    m = make_model(5, 0.47)
    for phi in (-40.0, 0.0, 25.0):
        w = std_weights(m.geometry, (90.0, phi))
        # coherent sum of 5 unit terms: 25 x single-element density
        single = m.density_constant
        assert power_density(m, w, 90.0, phi) == pytest.approx(25 * single, rel=1e-9)


def test_cut_grid():
    g = ScanGrid.cut(-90, 90, 2)
    assert len(g) == 91
    assert g.boresight == 45
    assert tuple(g.directions[g.boresight]) == (90.0, 0.0)
    assert g.neighbors[0] == (1,) and g.neighbors[45] == (44, 46)


def test_lattice_grid_neighbours_and_pole():
    g = ScanGrid.lattice(np.arange(0, 31, 10.0), np.arange(0, 360, 90.0))
    assert len(g) == 16
    assert tuple(g.directions[g.boresight])[0] == 0.0
    # all theta = 0 nodes point the same way and are joined
    pole = [i for i, d in enumerate(g.directions) if d[0] == 0]
    for a in pole:
        assert set(pole) - {a} <= set(g.neighbors[a])
    # phi wraps 270 -> 0
    a = 1 * 4 + 3
    assert 1 * 4 + 0 in g.neighbors[a]


def test_grid_validation():
    with pytest.raises(ValueError):
        ScanGrid(np.zeros((2, 2)), 0, ((1,), ()))
    with pytest.raises(ValueError):
        ScanGrid(np.zeros((2, 2)), 3, ((1,), (0,)))
