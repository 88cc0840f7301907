"""Mass balance of the six ionic species: Nernst-Planck fluxes, KKS metal-ion flux, hydrolysis.

Concentrations are stored as an array of shape (6, ny, nx) in mol/m^3 in the
species order of :data:`corrosionpf.params.SPECIES`.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energetics import h_func
from .grid import Grid, face_gradients, face_mean, flux_matrix, open_faces, transmissibility
from .params import CL, H, M, MOH, NA, OH, ReactionParams, f_over_rt

log = logging.getLogger(__name__)

C_FLOOR = 1e-30


def effective_diffusivity(D_l, D_s, phi):
    """Phase-interpolated diffusivity, D_s in the metal and D_l in the electrolyte."""
    h = h_func(phi)
    return D_s * h + (1.0 - h) * D_l


def species_fluxes(c, grad_c, D, z, grad_psi, dh_dx=None, dc_eq: float = 0.0,
                   temperature: float = 298.15, h=None):
    """Pointwise Nernst-Planck fluxes.

    Parameters
    ----------
    c, grad_c : ndarray, shape (6, ...)
        Concentrations and one Cartesian gradient component.
    D : ndarray, shape (6, ...)
        Effective diffusivities.
    z : ndarray, shape (6,)
    grad_psi : ndarray
        Gradient component of the solution potential.
    dh_dx : ndarray, optional
        Gradient of h(phi); adds the phase-gradient term to the metal-ion flux.
    dc_eq : float
        c_s_eq - c_l_eq in mol/m^3.
    h : ndarray, optional
        h(phi); with ``dh_dx`` the metal-ion migration term uses the
        liquid-phase concentration c - dc_eq h.
    """
    f = f_over_rt(temperature)
    zb = np.asarray(z).reshape((-1,) + (1,) * (np.ndim(c) - 1))
    J = -D * (grad_c + zb * f * c * grad_psi)
    if dh_dx is not None:
        J = J.copy()
        J[M] = J[M] + D[M] * dc_eq * dh_dx
        if h is not None:
            # migration carries only the liquid-phase share of the metal ion
            J[M] = J[M] + D[M] * zb[M] * f * dc_eq * h * grad_psi
    return J


def reaction_rates(c1, c2, c3, c4, rp: ReactionParams = ReactionParams()):
    """Source terms of hydrolysis and water dissociation for all six species."""
    R1 = rp.k1b * (c2 * c3 - rp.K1 * c1)
    R2 = -R1
    R4 = rp.k2b * (rp.K2 - c3 * c4)
    R3 = R2 + R4
    zero = np.zeros_like(np.asarray(R1, dtype=float))
    return R1, R2, R3, R4, zero, zero


def react(c1, c2, c3, c4, dt_eff, rp: ReactionParams = ReactionParams(),
          tol: float = 1e-12, max_iter: int = 60):
    """Backward-Euler integration of the two reaction extents, cell by cell.

    Hydrolysis advances by x (M -> MOH + H) and water dissociation by y
    (-> H + OH). ``dt_eff`` may vary per cell; zero leaves a cell untouched.
    The 2x2 Newton step is damped to keep every concentration positive.
    """
    c1, c2, c3, c4 = (np.asarray(a, dtype=float) for a in (c1, c2, c3, c4))
    dt_eff = np.broadcast_to(np.asarray(dt_eff, dtype=float), c1.shape)
    a = dt_eff * rp.k1b
    b = dt_eff * rp.k2b
    x = np.zeros_like(c1)
    y = np.zeros_like(c1)
    for _ in range(max_iter):
        n1, n2, n3, n4 = c1 - x, c2 + x, c3 + x + y, c4 + y
        r1 = x - a * (rp.K1 * n1 - n2 * n3)
        r2 = y - b * (rp.K2 - n3 * n4)
        j11 = 1.0 + a * (rp.K1 + n3 + n2)
        j12 = a * n2
        j21 = b * n4
        j22 = 1.0 + b * (n4 + n3)
        det = j11 * j22 - j12 * j21
        dx = -(j22 * r1 - j12 * r2) / det
        dy = -(-j21 * r1 + j11 * r2) / det
        # fraction-to-boundary damping
        alpha = np.ones_like(c1)
        for val, dv in ((n1, -dx), (n2, dx), (n3, dx + dy), (n4, dy)):
            with np.errstate(divide="ignore", invalid="ignore"):
                lim = np.where(dv < 0, -0.95 * val / dv, 1.0)
            alpha = np.minimum(alpha, np.clip(lim, 0.0, 1.0))
        x = x + alpha * dx
        y = y + alpha * dy
        scale = np.maximum.reduce([np.abs(c1), np.abs(c2), np.abs(c3), np.abs(c4), np.full_like(c1, 1e-20)])
        if np.all(np.abs(alpha * dx) <= tol * scale) and np.all(np.abs(alpha * dy) <= tol * scale):
            break
    return c1 - x, c2 + x, c3 + x + y, c4 + y


def _drift_matrix(qx: np.ndarray, qy: np.ndarray) -> sp.csr_matrix:
    """Upwind operator for face volume fluxes q (positive toward +x / +y).

    ``(A c)_cell`` is the net inflow into each cell.
    """
    ny = qx.shape[0]
    nx = qx.shape[1] + 1
    idx = np.arange(nx * ny).reshape(ny, nx)
    rows, cols, vals = [], [], []
    for lo, hi, q in ((idx[:, :-1], idx[:, 1:], qx), (idx[:-1, :], idx[1:, :], qy)):
        lo, hi, q = lo.ravel(), hi.ravel(), q.ravel()
        qp = np.maximum(q, 0.0)
        qm = np.minimum(q, 0.0)
        # flux lo->hi = qp c_lo + qm c_hi
        rows += [lo, lo, hi, hi]
        cols += [lo, hi, lo, hi]
        vals += [-qp, -qm, qp, qm]
    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(nx * ny, nx * ny)).tocsr()


def species_operator(grid: Grid, phi, psi, D_l: float, D_s: float, z: float, active,
                     electromigration: bool = True, temperature: float = 298.15):
    """Flux operator of one species (net inflow per cell) and its diffusive transmissibilities."""
    h = h_func(phi)
    ox, oy = open_faces(active)
    D = D_s * h + (1.0 - h) * D_l
    Dx, Dy = face_mean(grid, D, "arithmetic")
    tx, ty = transmissibility(grid, Dx * ox, Dy * oy)
    A = flux_matrix(tx, ty)
    if electromigration and z != 0.0:
        f = f_over_rt(temperature)
        dpx, dpy = face_gradients(grid, psi)
        qx = -Dx * z * f * dpx * grid.area_x[:, 1:-1] * ox
        qy = -Dy * z * f * dpy * grid.area_y[1:-1, :] * oy
        A = A + _drift_matrix(qx, qy)
    return A, tx, ty


def step_species(grid: Grid, c: np.ndarray, phi: np.ndarray, psi: np.ndarray, dt: float,
                 D_l, D_s, z, active: np.ndarray, dc_eq: float, rp: ReactionParams | None = None,
                 electromigration: bool = True, temperature: float = 298.15,
                 neg_tol: float = 1e-6, species=None) -> tuple[np.ndarray, float]:
    """Advance all species by one backward-Euler step.

    Transport (diffusion, upwinded electromigration and the KKS phase-gradient
    term of the metal ion) is solved implicitly per species on the new phase
    field. For the metal ion both diffusion and migration act on the
    liquid-phase concentration c - dc_eq h, which keeps it non-negative.
    Reactions follow as a local implicit solve, weighted by the liquid
    fraction and acting on the liquid-phase metal-ion concentration.

    Returns
    -------
    c_new : ndarray
        Updated concentrations, floored at :data:`C_FLOOR`.
    floored : float
        Amount (mol, or mol per unit depth in planar mode) added by the floor.

    ``species`` restricts the transport solve to a subset of indices; the
    other species are taken as already transported.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    V = grid.volume
    h = h_func(phi)
    out = c.copy()
    subset = range(c.shape[0]) if species is None else species
    for i in subset:
        A, tx, ty = species_operator(grid, phi, psi, D_l[i], D_s[i], z[i], active, electromigration,
                                     temperature)
        rhs = (V * c[i]).ravel() / dt
        if i == M:
            # fluxes act on the liquid-phase share c - dc_eq h
            rhs -= A @ (dc_eq * h).ravel()
        K = sp.diags(V.ravel() / dt) - A
        out[i] = spla.spsolve(K.tocsc(), rhs).reshape(grid.shape)
    if rp is not None:
        w = np.where(active, 1.0 - h, 0.0)
        c1l = out[M] - dc_eq * h
        c1l_new, out[MOH], out[H], out[OH] = react(np.maximum(c1l, 0.0), np.maximum(out[MOH], 0.0),
                                                   np.maximum(out[H], 0.0), np.maximum(out[OH], 0.0),
                                                   w * dt, rp)
        out[M] = out[M] + (c1l_new - np.maximum(c1l, 0.0))
    worst = np.min(out / np.maximum(np.abs(c), 1.0))
    if worst < -neg_tol:
        raise FloatingPointError(f"negative concentration beyond tolerance ({worst:.3e})")
    floored = float(np.sum(np.maximum(C_FLOOR - out, 0.0) * V))
    if floored > 0:
        log.debug("concentration floor added %.3e mol", floored)
    return np.maximum(out, C_FLOOR), floored


def total_amount(grid: Grid, ci: np.ndarray, mask=None) -> float:
    """Integral of a concentration field over the grid (optionally masked)."""
    w = grid.volume if mask is None else grid.volume * mask
    return float(np.sum(ci * w))


def ph_poh(c_h, c_oh):
    """pH and pOH from mol/m^3 concentrations."""
    return -np.log10(np.asarray(c_h) / 1000.0), -np.log10(np.asarray(c_oh) / 1000.0)


__all__ = ["effective_diffusivity", "species_fluxes", "reaction_rates", "react", "step_species",
           "total_amount", "ph_poh", "C_FLOOR", "NA", "CL"]
