import numpy as np
import pytest
from hypothesis import given, strategies as st

from corrosionpf.electrostatics import (conductivity_field, contour_length, edl_boundary_potential,
                                        electrolyte_conductivity, geometric_factor, solve_potential)
from corrosionpf.grid import Grid
from corrosionpf.params import FARADAY, GAS_CONSTANT, CircuitParams, SpeciesParams


def test_conductivity_of_nacl():
    sp = SpeciesParams()
    c = np.zeros(6)
    c[4] = c[5] = 1000.0
    lam = electrolyte_conductivity(c, sp.D_l, sp.z)
    ref = FARADAY ** 2 / (GAS_CONSTANT * 298.15) * 1000.0 * (sp.D_l[4] + sp.D_l[5])
    assert lam == pytest.approx(ref, rel=1e-12)
    assert electrolyte_conductivity(np.zeros(6), sp.D_l, sp.z, floor=1e-3) == 1e-3
    assert conductivity_field(1.0, 5.0, 1e6) == 1e6
    assert conductivity_field(0.0, 5.0, 1e6) == 5.0


def test_edl_closed_form():
    cp = CircuitParams(psi0=1.329, chi=120.0, t_c=10.0, xi=1.0)
    assert edl_boundary_potential(0.0, cp) == pytest.approx(1.329)
    assert edl_boundary_potential(1e5, cp) == pytest.approx(1.329 / 121, rel=1e-12)
    ref = 1.329 * (1 / 121 + 120 / 121 * np.exp(-1.0))
    assert edl_boundary_potential(10.0, cp) == pytest.approx(ref, rel=1e-12)
    with pytest.raises(ValueError):
        edl_boundary_potential(-1.0, cp)


@given(st.floats(0.0, 500.0), st.floats(0.0, 500.0), st.floats(0.5, 5.0))
def test_edl_monotone_decay(t1, t2, xi):
    cp = CircuitParams(psi0=1.0, xi=xi)
    lo, hi = sorted((t1, t2))
    assert edl_boundary_potential(hi, cp) <= edl_boundary_potential(lo, cp) + 1e-15


def test_two_resistors_in_series():
    g = Grid.uniform(1, 10, 1e-3)
    lam = np.ones(g.shape)
    lam[5:] = 3.0
    act = np.ones(g.shape, bool)
    psi, (i_in, i_out) = solve_potential(g, lam, act, np.array([True]), np.array([True]), 1.0, 0.0,
                                         return_currents=True)
    # R = L1/(k1 A) + L2/(k2 A) with A = dx^2 (unit depth times dx)
    R = 5e-3 / (1.0 * 1e-3) + 5e-3 / (3.0 * 1e-3)
    assert i_in == pytest.approx(1.0 / R, rel=1e-10)
    assert i_out == pytest.approx(i_in, rel=1e-10)
    assert np.all(np.diff(psi[:, 0]) < 0)


def test_potential_inactive_cells_zero():
    g = Grid.uniform(4, 6, 1.0)
    act = np.ones(g.shape, bool)
    act[:, 0] = False
    psi = solve_potential(g, np.ones(g.shape), act, np.ones(4, bool), np.ones(4, bool), 0.5)
    assert np.all(psi[:, 0] == 0)
    np.testing.assert_allclose(psi[:, 1], psi[:, 3])


def _circle_phi(n, r, h):
    x = (np.arange(n) + 0.5) * h
    X, Y = np.meshgrid(x - n * h / 2, x - n * h / 2)
    return 0.5 * (1 - np.tanh((np.hypot(X, Y) - r) / (2 * h)))


def test_contour_length_circle():
    n, h, r = 120, 1.0, 30.0
    g = Grid.uniform(n, n, h)
    assert contour_length(g, _circle_phi(n, r, h)) == pytest.approx(2 * np.pi * r, rel=5e-3)


def test_contour_area_axisymmetric_hemisphere():
    # phi = 1/2 on a sphere of radius r centred on the axis; weighted length is its area
    n, h, r = 100, 1.0, 40.0
    xf = np.arange(n + 1) * h
    yf = np.arange(n + 1) * h - n * h / 2
    g = Grid(xf, yf, "axisymmetric")
    X, Y = np.meshgrid(g.xc, g.yc)
    phi = 0.5 * (1 - np.tanh((np.hypot(X, Y) - r) / (2 * h)))
    # the contour starts half a cell from the axis; compare with the matching sphere zone
    assert contour_length(g, phi) == pytest.approx(4 * np.pi * r ** 2, rel=1e-2)


def test_column_contour_and_geometric_factor():
    g = Grid(np.array([0.0, 2.0]), np.arange(11.0), "axisymmetric")
    phi = np.r_[np.ones(4), np.zeros(6)][:, None]
    assert contour_length(g, phi) == pytest.approx(np.pi * 4.0)
    assert geometric_factor(g, phi, np.pi * 2.0) == pytest.approx(2.0)
    assert geometric_factor(g, np.zeros((10, 1)), np.pi, last=1.7) == 1.7
