import numpy as np
import pytest
from hypothesis import given, strategies as st

from corrosionpf.energetics import (df_dphi_and_slope, equilibrium_profile, equilibrium_width,
                                    f_chem_and_derivs, gamma_from_params, h_func, interface_energy,
                                    interface_width, interp_functions, kks_partition, phase_params,
                                    second_derivatives, ell_from_params)
from corrosionpf.params import EquilibriumConcentrations, PhaseFieldParams

PF = PhaseFieldParams()
CONC = EquilibriumConcentrations()


def test_table_constants():
    omega, kappa = phase_params(2.10, 5e-6)
    assert omega == pytest.approx(3.15e5, rel=1e-12)
    assert kappa == pytest.approx(1.575e-5, rel=1e-12)
    assert CONC.cbar_l == pytest.approx(5.1 / 144.3, rel=1e-12)
    assert CONC.dcbar == pytest.approx(1 - 5.1 / 144.3, rel=1e-12)


@given(st.floats(0.01, 100.0), st.floats(1e-8, 1e-3))
def test_phase_params_inverse(gamma, ell):
    omega, kappa = phase_params(gamma, ell)
    assert gamma_from_params(omega, kappa) == pytest.approx(gamma, rel=1e-12)
    assert ell_from_params(omega, kappa) == pytest.approx(ell, rel=1e-12)


def test_phase_params_reject_nonpositive():
    with pytest.raises(ValueError):
        phase_params(0.0, 1e-6)
    with pytest.raises(ValueError):
        phase_params(1.0, -1e-6)


def test_interpolation_endpoints():
    g, dg, h, dh = interp_functions(np.array([0.0, 1.0]))
    np.testing.assert_allclose(g, 0.0)
    np.testing.assert_allclose(dg, 0.0)
    np.testing.assert_allclose(h, [0.0, 1.0])
    np.testing.assert_allclose(dh, 0.0)
    assert h_func(0.5) == pytest.approx(0.5)


@given(st.floats(-0.2, 1.2))
def test_interp_derivatives_match_differences(phi):
    eps = 1e-6
    g0, dg, h0, dh = interp_functions(phi)
    gp, _, hp, _ = interp_functions(phi + eps)
    gm, _, hm, _ = interp_functions(phi - eps)
    assert dg == pytest.approx((gp - gm) / (2 * eps), abs=1e-7)
    assert dh == pytest.approx((hp - hm) / (2 * eps), abs=1e-7)
    d2g, d2h = second_derivatives(phi)
    _, dgp, _, dhp = interp_functions(phi + eps)
    _, dgm, _, dhm = interp_functions(phi - eps)
    assert d2g == pytest.approx((dgp - dgm) / (2 * eps), abs=1e-6)
    assert d2h == pytest.approx((dhp - dhm) / (2 * eps), abs=1e-6)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_kks_partition(cbar, phi):
    cl, cs = kks_partition(cbar, phi, CONC)
    h = h_func(phi)
    assert h * cs + (1 - h) * cl == pytest.approx(cbar, abs=1e-12)
    assert cs - cl == pytest.approx(CONC.dcbar, abs=1e-12)


def test_bulk_phases_are_minima():
    f_s, dc_s, dp_s = f_chem_and_derivs(1.0, 1.0, PF, CONC)
    f_l, dc_l, dp_l = f_chem_and_derivs(CONC.cbar_l, 0.0, PF, CONC)
    for v in (f_s, dc_s, dp_s, f_l, dc_l, dp_l):
        assert abs(v) < 1e-6


@given(st.floats(0.0, 1.0), st.floats(0.01, 0.99))
def test_slope_matches_difference(cbar, phi):
    eps = 1e-7
    F, dF = df_dphi_and_slope(cbar, phi, PF, CONC)
    Fp, _ = df_dphi_and_slope(cbar, phi + eps, PF, CONC)
    Fm, _ = df_dphi_and_slope(cbar, phi - eps, PF, CONC)
    assert dF == pytest.approx((Fp - Fm) / (2 * eps), rel=1e-5, abs=1e-2 * (PF.A + PF.omega) * 1e-6)
    assert F == pytest.approx(f_chem_and_derivs(cbar, phi, PF, CONC)[2], rel=1e-12, abs=1e-6)


def test_equilibrium_profile_energy_and_width():
    dx = PF.ell / 100
    x = np.arange(-20 * PF.ell, 20 * PF.ell, dx)
    phi = equilibrium_profile(x, PF.ell)
    assert interface_energy(phi, dx, PF) == pytest.approx(2.10, rel=1e-3)
    assert interface_width(x, phi) == pytest.approx(equilibrium_width(PF.ell), rel=1e-3)
    assert equilibrium_width(PF.ell) == pytest.approx(0.5 * np.log(9) * 5e-6, rel=1e-12)


def test_equilibrium_profile_solves_euler_lagrange():
    # kappa phi'' = omega g'(phi) for the pure double well
    x = np.linspace(-3 * PF.ell, 3 * PF.ell, 2001)
    phi = equilibrium_profile(x, PF.ell)
    d2 = np.gradient(np.gradient(phi, x), x)
    dg = interp_functions(phi)[1]
    resid = PF.kappa * d2[5:-5] - PF.omega * dg[5:-5]
    assert np.max(np.abs(resid)) < 1e-3 * PF.omega * 8


def test_interface_width_orientation_independent():
    x = np.linspace(-20e-6, 20e-6, 801)
    phi = equilibrium_profile(x, PF.ell)
    assert interface_width(x, phi) == pytest.approx(interface_width(x, phi[::-1]), rel=1e-9)
