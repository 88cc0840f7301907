"""Free-energy densities of the metal/electrolyte mixture and their derivatives.

Concentrations enter in normalized form, cbar = c * V_m, so that the solid
equilibrium value is 1. The phase field is never clamped here: the
polynomials extrapolate smoothly for small over- and undershoots.
"""
from __future__ import annotations

import numpy as np

from .params import EquilibriumConcentrations, PhaseFieldParams


def _as_float(x):
    # keep extended precision inputs (used by finite-difference checks)
    return np.asarray(x, dtype=np.result_type(x, float))


def interp_functions(phi):
    """Double well g, interpolation h and their first derivatives.

    Returns
    -------
    g, dg, h, dh : ndarray
        ``g = 16 phi^2 (1-phi)^2`` and ``h = phi^3 (10 - 15 phi + 6 phi^2)``.
    """
    phi = _as_float(phi)
    p1 = 1.0 - phi
    g = 16.0 * phi**2 * p1**2
    dg = 32.0 * phi * p1 * (1.0 - 2.0 * phi)
    h = phi**3 * (10.0 - 15.0 * phi + 6.0 * phi**2)
    dh = 30.0 * phi**2 * p1**2
    return g, dg, h, dh


def h_func(phi):
    """Interpolation function h alone."""
    phi = _as_float(phi)
    return phi**3 * (10.0 - 15.0 * phi + 6.0 * phi**2)


def second_derivatives(phi):
    """g'' and h'' (used by the implicit phase-field Jacobian)."""
    phi = _as_float(phi)
    d2g = 32.0 * (1.0 - 6.0 * phi + 6.0 * phi**2)
    d2h = 60.0 * phi * (1.0 - phi) * (1.0 - 2.0 * phi)
    return d2g, d2h


def phase_params(gamma: float, ell: float) -> tuple[float, float]:
    """Barrier height and gradient coefficient from interfacial energy and thickness."""
    if gamma <= 0 or ell <= 0:
        raise ValueError("interfacial energy and thickness must be positive")
    return 3.0 * gamma / (4.0 * ell), 1.5 * gamma * ell


def gamma_from_params(omega: float, kappa: float) -> float:
    # omega * kappa = 9 Gamma^2 / 8
    return np.sqrt(8.0 * omega * kappa / 9.0)


def ell_from_params(omega: float, kappa: float) -> float:
    return np.sqrt(kappa / (2.0 * omega))


def kks_partition(cbar, phi, conc: EquilibriumConcentrations = EquilibriumConcentrations()):
    """Split the mixture concentration into liquid and solid phase concentrations.

    Equal-curvature parabolas make the equal-chemical-potential condition linear,
    so the partition is closed form.
    """
    h = h_func(phi)
    d = conc.dcbar
    cl = np.asarray(cbar) - h * d
    cs = np.asarray(cbar) + (1.0 - h) * d
    return cl, cs


def f_chem_and_derivs(cbar, phi, pf: PhaseFieldParams = PhaseFieldParams(),
                      conc: EquilibriumConcentrations = EquilibriumConcentrations()):
    """Metal-ion chemical energy plus barrier term.

    Returns
    -------
    f : ndarray
        Energy density in J/m^3.
    df_dc : ndarray
        Derivative with respect to the normalized concentration.
    df_dphi : ndarray
        Derivative with respect to phi at fixed cbar (the Allen-Cahn driving term).
    """
    g, dg, h, dh = interp_functions(phi)
    d = conc.dcbar
    bracket = np.asarray(cbar) - h * d - conc.cbar_l
    f = 0.5 * pf.A * bracket**2 + pf.omega * g
    df_dc = pf.A * bracket
    df_dphi = -pf.A * bracket * dh * d + pf.omega * dg
    return f, df_dc, df_dphi


def df_dphi_and_slope(cbar, phi, pf: PhaseFieldParams, conc: EquilibriumConcentrations):
    """Driving force and its derivative in phi at fixed cbar."""
    _, dg, h, dh = interp_functions(phi)
    d2g, d2h = second_derivatives(phi)
    d = conc.dcbar
    bracket = np.asarray(cbar) - h * d - conc.cbar_l
    F = -pf.A * bracket * dh * d + pf.omega * dg
    dF = pf.A * (dh * d) ** 2 - pf.A * bracket * d2h * d + pf.omega * d2g
    return F, dF


def equilibrium_profile(x, ell: float):
    """Flat-interface solution of the pure double-well problem, solid for x < 0."""
    return 0.5 * (1.0 - np.tanh(2.0 * np.asarray(x) / ell))


def equilibrium_width(ell: float) -> float:
    """Distance over which the equilibrium profile goes from 0.9 to 0.1."""
    return 0.5 * np.log(9.0) * ell


def interface_energy(phi, dx: float, pf: PhaseFieldParams) -> float:
    """Excess energy per unit area of a sampled 1-D profile.

    Gradients live on faces and the barrier on cells, matching the
    three-point Laplacian used by the Allen-Cahn update.
    """
    phi = _as_float(phi)
    grad = np.diff(phi) / dx
    g = interp_functions(phi)[0]
    return float(0.5 * pf.kappa * np.sum(grad**2) * dx + pf.omega * np.sum(g) * dx)


def interface_width(x, phi) -> float:
    """Distance between the phi = 0.9 and phi = 0.1 crossings of a monotone profile."""
    x = np.asarray(x, dtype=float)
    phi = _as_float(phi)
    if phi[0] < phi[-1]:
        x, phi = x[::-1], phi[::-1]
    # profile decreasing in the index now; np.interp wants increasing abscissae
    x9 = np.interp(0.9, phi[::-1], x[::-1])
    x1 = np.interp(0.1, phi[::-1], x[::-1])
    return float(abs(x1 - x9))
