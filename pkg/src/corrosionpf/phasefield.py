"""Allen-Cahn evolution of the phase field with a kinetics-derived mobility."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energetics import df_dphi_and_slope, f_chem_and_derivs, interp_functions
from .grid import Grid, flux_matrix, open_faces, transmissibility
from .params import EquilibriumConcentrations, PhaseFieldParams

BAND = (1e-3, 0.999)


class PhaseFieldFailure(RuntimeError):
    pass


def laplacian_operator(grid: Grid, active: np.ndarray) -> sp.csr_matrix:
    """Finite-volume Laplacian with zero-flux walls around inactive cells."""
    ox, oy = open_faces(active)
    tx, ty = transmissibility(grid, ox.astype(float), oy.astype(float))
    return sp.diags(1.0 / grid.volume.ravel()) @ flux_matrix(tx, ty)


def allen_cahn_rhs(grid: Grid, phi, cbar, L, pf: PhaseFieldParams, conc: EquilibriumConcentrations,
                   active=None):
    """Time derivative -L (df/dphi - kappa lap phi)."""
    if active is None:
        active = np.ones(grid.shape, dtype=bool)
    lap = (laplacian_operator(grid, active) @ np.ravel(phi)).reshape(grid.shape)
    _, _, dfdphi = f_chem_and_derivs(cbar, phi, pf, conc)
    return -np.asarray(L) * (dfdphi - pf.kappa * lap)


def extend_mobility(phi: np.ndarray, L_cell: np.ndarray, active: np.ndarray, band=BAND):
    """Interface-band mobility, extended outward layer by layer.

    Each sweep assigns to every unfilled cell the mean of its already filled
    four neighbours, so the extension treats mirror-image cells identically.
    Values are floored at zero (no redeposition) and inactive cells get zero.
    """
    in_band = (phi > band[0]) & (phi < band[1]) & active
    L = np.where(in_band, np.maximum(np.asarray(L_cell, dtype=float), 0.0), 0.0)
    if not np.any(in_band):
        return np.zeros_like(L)
    known = in_band.copy()
    while not known.all():
        total = np.zeros_like(L)
        count = np.zeros_like(L)
        w = known.astype(float)
        lw = L * w
        total[1:] += lw[:-1]
        count[1:] += w[:-1]
        total[:-1] += lw[1:]
        count[:-1] += w[1:]
        total[:, 1:] += lw[:, :-1]
        count[:, 1:] += w[:, :-1]
        total[:, :-1] += lw[:, 1:]
        count[:, :-1] += w[:, 1:]
        new = ~known & (count > 0)
        if not new.any():
            break
        L[new] = total[new] / count[new]
        known |= new
    return np.where(active, L, 0.0)


def step_phase(grid: Grid, phi_old: np.ndarray, cbar: np.ndarray, L: np.ndarray, dt: float,
               pf: PhaseFieldParams, conc: EquilibriumConcentrations, active=None,
               tol: float = 1e-9, max_iter: int = 40, overshoot: float = 0.05):
    """Backward-Euler step of the Allen-Cahn equation at fixed concentration.

    The Laplacian and the local driving force are both implicit; the nonlinear
    system is solved with Newton iterations whose diagonal uses the local
    slope of the driving force floored at zero.

    Returns
    -------
    phi : ndarray
    iterations : int
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if active is None:
        active = np.ones(grid.shape, dtype=bool)
    lap = laplacian_operator(grid, active)
    dtL = (dt * np.where(active, L, 0.0)).ravel()
    phi0 = phi_old.ravel().copy()
    phi = phi0.copy()
    cb = np.ravel(cbar)
    DL = sp.diags(dtL)
    K_lap = DL @ (pf.kappa * lap)
    scale = 1.0 + dtL * (pf.omega * 32.0 + pf.A * conc.dcbar**2 * 4.0)
    for it in range(1, max_iter + 1):
        F, dF = df_dphi_and_slope(cb, phi, pf, conc)
        r = phi - phi0 + dtL * F - K_lap @ phi
        J = sp.diags(1.0 + dtL * np.maximum(dF, 0.0)) - K_lap
        delta = spla.spsolve(J.tocsc(), -r)
        step = np.clip(delta, -0.5, 0.5)
        phi = phi + step
        if np.max(np.abs(step)) < tol and np.max(np.abs(r) / scale) < 1e-6:
            break
    else:
        raise PhaseFieldFailure(f"Newton did not converge in {max_iter} iterations "
                                f"(|dphi| = {np.max(np.abs(step)):.2e})")
    phi = phi.reshape(grid.shape)
    lo, hi = phi[active].min(), phi[active].max()
    if lo < -overshoot or hi > 1.0 + overshoot:
        raise PhaseFieldFailure(f"phase field left [-{overshoot}, 1+{overshoot}]: [{lo:.3f}, {hi:.3f}]")
    return phi, it


def step_coupled(grid: Grid, phi_old: np.ndarray, c1_old: np.ndarray, L: np.ndarray, dt: float,
                 pf: PhaseFieldParams, conc: EquilibriumConcentrations, operator, active=None,
                 tol: float = 1e-9, max_iter: int = 40, overshoot: float = 0.05):
    """Backward-Euler step of the phase field and the metal-ion balance, solved together.

    ``operator(phi)`` returns the metal-ion flux operator first (see
    :func:`corrosionpf.transport.species_operator`) evaluated on a phase-field
    iterate; it acts on the liquid-phase share c1 - dc_eq h. The Newton
    Jacobian is exact except for the dependence of the diffusivity on phi,
    which is lagged by one iteration.

    Returns
    -------
    phi, c1 : ndarray
    iterations : int
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if active is None:
        active = np.ones(grid.shape, dtype=bool)
    n = grid.size
    vm = conc.molar_volume
    d = conc.dcbar
    lap = laplacian_operator(grid, active)
    dtL = (dt * np.where(active, L, 0.0)).ravel()
    DL = sp.diags(dtL)
    K_lap = DL @ (pf.kappa * lap)
    dt_v = dt / grid.volume.ravel()
    phi0 = phi_old.ravel().copy()
    u0 = np.ravel(c1_old) * vm
    phi, u = phi0.copy(), u0.copy()
    scale = 1.0 + dtL * (pf.omega * 32.0 + pf.A * d**2 * 4.0)
    eye = sp.identity(n, format="csr")
    for it in range(1, max_iter + 1):
        A = operator(phi.reshape(grid.shape))[0]
        _, _, h, dh = interp_functions(phi)
        F, dF = df_dphi_and_slope(u, phi, pf, conc)
        r_phi = phi - phi0 + dtL * F - K_lap @ phi
        r_u = u - u0 - dt_v * (A @ (u - d * h))
        J = sp.bmat([[sp.diags(1.0 + dtL * dF) - K_lap, sp.diags(-dtL * pf.A * dh * d)],
                     [sp.diags(dt_v) @ A @ sp.diags(d * dh), eye - sp.diags(dt_v) @ A]], format="csc")
        delta = spla.spsolve(J, -np.concatenate([r_phi, r_u]))
        if not np.all(np.isfinite(delta)):
            raise PhaseFieldFailure("singular coupled Jacobian")
        dphi = np.clip(delta[:n], -0.5, 0.5)
        phi = phi + dphi
        u = u + delta[n:]
        err = max(np.max(np.abs(dphi)), np.max(np.abs(delta[n:])))
        if err < tol and np.max(np.abs(r_phi) / scale) < 1e-6:
            break
    else:
        raise PhaseFieldFailure(f"coupled Newton did not converge in {max_iter} iterations "
                                f"(|d| = {err:.2e})")
    phi = phi.reshape(grid.shape)
    lo, hi = phi[active].min(), phi[active].max()
    if lo < -overshoot or hi > 1.0 + overshoot:
        raise PhaseFieldFailure(f"phase field left [-{overshoot}, 1+{overshoot}]: [{lo:.3f}, {hi:.3f}]")
    return phi, (u / vm).reshape(grid.shape), it


def free_energy(grid: Grid, phi, cbar, pf: PhaseFieldParams, conc: EquilibriumConcentrations,
                active=None) -> float:
    """Discrete total free energy of chemical, barrier and gradient terms."""
    if active is None:
        active = np.ones(grid.shape, dtype=bool)
    f, _, _ = f_chem_and_derivs(cbar, phi, pf, conc)
    ox, oy = open_faces(active)
    tx, ty = transmissibility(grid, ox.astype(float), oy.astype(float))
    grad2 = np.sum(tx * np.diff(phi, axis=1) ** 2) + np.sum(ty * np.diff(phi, axis=0) ** 2)
    return float(np.sum(f * grid.volume * active) + 0.5 * pf.kappa * grad2)
