"""Interface kinetics: overpotential, Butler-Volmer bracket, Gutman factor and mobility."""
from __future__ import annotations

import numpy as np

from .params import FARADAY, GAS_CONSTANT, KineticsParams


def overpotential(E_app, E_eq, delta_E, psi_l):
    """Local overpotential of a grain, in volts."""
    return E_app - (E_eq + np.asarray(delta_E)) - np.asarray(psi_l)


def butler_volmer_factor(eta, alpha: float = 0.26, z1: float = 2.19,
                         temperature: float = 298.15, clip: float = 50.0):
    """Anodic minus cathodic exponential, with arguments clipped at +-clip.

    The clip is a saturation, not an error: at overpotentials that large the
    dissolution is transport limited anyway.
    """
    a = z1 * FARADAY / (GAS_CONSTANT * temperature) * np.asarray(eta, dtype=float)
    fwd = np.clip(alpha * a, -clip, clip)
    bwd = np.clip(-(1.0 - alpha) * a, -clip, clip)
    return np.exp(fwd) - np.exp(bwd)


def mechanochemical_factor(eps_p, eps0_yield: float, sigma_h, molar_volume: float,
                           temperature: float = 298.15):
    """Plastic-strain and hydrostatic-stress amplification of the dissolution rate."""
    if eps0_yield <= 0:
        raise ValueError("yield strain must be positive")
    eps_p = np.asarray(eps_p, dtype=float)
    arg = np.asarray(sigma_h, dtype=float) * molar_volume / (GAS_CONSTANT * temperature)
    return (eps_p / eps0_yield + 1.0) * np.exp(np.minimum(arg, 50.0))


def mobility(L0: float, eta, eps_p=0.0, sigma_h=0.0, kin: KineticsParams = KineticsParams(),
             molar_volume: float = 1.0 / 144.3e3):
    """Phase-field mobility. Negative where eta < 0; the caller floors it."""
    if L0 <= 0:
        raise ValueError("L0 must be positive")
    bv = butler_volmer_factor(eta, kin.alpha, kin.z1, kin.temperature, kin.exp_clip)
    mech = mechanochemical_factor(eps_p, kin.yield_strain, sigma_h, molar_volume, kin.temperature)
    return L0 * bv * mech


def faradaic_current(h_old, h_new, cell_volume, dt: float, exposed_area: float,
                     z1: float = 2.19, molar_volume: float = 1.0 / 144.3e3) -> float:
    """Anodic current density from the metal volume lost over one step.

    Parameters
    ----------
    h_old, h_new : ndarray
        Interpolation function h(phi) before and after the step.
    cell_volume : ndarray
        Cell measure (area per unit depth in planar runs, 2 pi r dr dz in
        axisymmetric ones).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if exposed_area <= 0:
        raise ValueError("exposed area must be positive")
    dV = float(np.sum((np.asarray(h_old) - np.asarray(h_new)) * cell_volume))
    return z1 * FARADAY * dV / (molar_volume * exposed_area * dt)
