"""Solution potential: conductivity, double-layer boundary value, geometric factor and Ohm's law."""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from skimage import measure

from .energetics import h_func
from .grid import Grid, face_mean, flux_matrix, open_faces, transmissibility
from .params import FARADAY, GAS_CONSTANT, CircuitParams

log = logging.getLogger(__name__)


def electrolyte_conductivity(c, D, z, temperature: float = 298.15, floor: float = 0.0):
    """Ionic conductivity (F^2/RT) sum_i D_i z_i^2 c_i, optionally floored.

    ``c`` has the species on its first axis; ``D`` either matches ``c`` or is
    one value per species.
    """
    c = np.asarray(c, dtype=float)
    shape = (-1,) + (1,) * (c.ndim - 1)
    D = np.asarray(D, dtype=float)
    if D.ndim == 1:
        D = D.reshape(shape)
    z2 = np.asarray(z, dtype=float).reshape(shape) ** 2
    lam = FARADAY**2 / (GAS_CONSTANT * temperature) * np.sum(D * z2 * c, axis=0)
    return np.maximum(lam, floor)


def conductivity_field(phi, lam_l, lam_s: float):
    """Phase-interpolated conductivity."""
    h = h_func(phi)
    return lam_s * h + (1.0 - h) * lam_l


def edl_boundary_potential(t, cp: CircuitParams):
    """Potential at the outer edge of the double layer after time ``t``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    chi = cp.chi
    return cp.psi0 * (1.0 / (1.0 + chi) + chi / (1.0 + chi) * np.exp(-t / (cp.xi * cp.t_c)))


def contour_length(grid: Grid, phi: np.ndarray, mask=None, level: float = 0.5,
                   weighted: bool | None = None) -> float:
    """Length (planar) or area (axisymmetric) of the phi = level iso-line.

    Marching squares runs on cell centres; contour vertices are mapped to
    physical coordinates by linear interpolation of the centre positions.
    Segments touching masked cells are dropped.
    """
    weighted = grid.mode == "axisymmetric" if weighted is None else weighted
    xs, ys = grid.xc, grid.yc
    if min(phi.shape) < 2:
        # single column or row: each crossing spans the full cross-section
        prof = np.ravel(phi) - level
        n_cross = int(np.sum(np.signbit(prof[1:]) != np.signbit(prof[:-1])))
        if phi.shape[1] == 1:
            return n_cross * float(grid.volume[0, 0] / grid.dy[0])
        return n_cross * float(grid.dy[0])
    total = 0.0
    for cont in measure.find_contours(phi, level, mask=mask):
        y = np.interp(cont[:, 0], np.arange(ys.size), ys)
        x = np.interp(cont[:, 1], np.arange(xs.size), xs)
        seg = np.hypot(np.diff(x), np.diff(y))
        if weighted:
            seg = seg * 2.0 * np.pi * 0.5 * (x[1:] + x[:-1])
        total += float(np.sum(seg))
    return total


def geometric_factor(grid: Grid, phi: np.ndarray, initial_length: float, mask=None,
                     last: float = 1.0) -> float:
    """Ratio of the current interface measure to its initial value."""
    if initial_length <= 0:
        return last
    length = contour_length(grid, phi, mask)
    if length <= 0:
        log.warning("no phi = 1/2 interface found; keeping xi = %g", last)
        return last
    return length / initial_length


class PotentialFailure(RuntimeError):
    pass


def solve_potential(grid: Grid, lam: np.ndarray, active: np.ndarray, bottom_mask: np.ndarray,
                    top_mask: np.ndarray, psi_bottom: float, psi_top: float = 0.0,
                    return_currents: bool = False):
    """Steady conduction div(lam grad psi) = 0 with Dirichlet edges.

    Parameters
    ----------
    lam : ndarray
        Cell conductivity; face values use the harmonic mean.
    active : ndarray of bool
        Conducting cells; others are excluded and get psi = 0.
    bottom_mask, top_mask : ndarray of bool, shape (nx,)
        Bottom-row and top-row cells whose outer face carries the Dirichlet value.

    Returns
    -------
    psi : ndarray
    currents : (float, float), optional
        Current entering through the bottom and leaving through the top.
    """
    ox, oy = open_faces(active)
    kx, ky = face_mean(grid, np.where(active, lam, 0.0), "harmonic")
    tx, ty = transmissibility(grid, kx * ox, ky * oy)
    A = -flux_matrix(tx, ty)
    n = grid.size
    b = np.zeros(n)
    diag = np.zeros(grid.shape)
    rhs = np.zeros(grid.shape)
    tb = grid.area_y[0] * lam[0] / (0.5 * grid.dy[0]) * (bottom_mask & active[0])
    tt = grid.area_y[-1] * lam[-1] / (0.5 * grid.dy[-1]) * (top_mask & active[-1])
    diag[0] += tb
    rhs[0] += tb * psi_bottom
    diag[-1] += tt
    rhs[-1] += tt * psi_top
    diag[~active] = 1.0
    A = A + sp.diags(diag.ravel())
    b = rhs.ravel()
    # equilibrate rows: conductivity contrast reaches 1e9
    s = 1.0 / np.maximum(np.abs(A).sum(axis=1).A1, 1e-300)
    psi = spla.spsolve((sp.diags(s) @ A).tocsc(), s * b).reshape(grid.shape)
    if not np.all(np.isfinite(psi)):
        raise PotentialFailure("potential solve produced non-finite values")
    res = A @ psi.ravel() - b
    scale = np.abs(rhs).sum() + 1e-300
    if np.abs(res).sum() > 1e-8 * scale and np.abs(res).max() > 1e-8 * np.abs(b).max():
        raise PotentialFailure(f"potential residual {np.abs(res).sum() / scale:.3e}")
    psi = np.where(active, psi, 0.0)
    if return_currents:
        i_in = float(np.sum(tb * (psi_bottom - psi[0])))
        i_out = float(np.sum(tt * (psi[-1] - psi_top)))
        return psi, (i_in, i_out)
    return psi
