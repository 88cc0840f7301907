"""Rectilinear finite-volume grids (planar x-y or axisymmetric r-z) and face operators.

Arrays are indexed ``[j, i]`` with ``j`` along y (or z) and ``i`` along x (or r).
Cells are uniform inside a refinement band and geometrically stretched outside.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

ELECTROLYTE, METAL, PROTECTIVE = 0, 1, 2


def graded_faces(x0: float, band0: float, band1: float, x1: float, h: float,
                 ratio: float = 1.2) -> np.ndarray:
    """Face coordinates with uniform spacing ``h`` on [band0, band1].

    Outside the band the spacing grows by ``ratio`` per cell up to the
    domain ends ``x0`` and ``x1``; the band edges are snapped so that the band
    holds an integer number of cells.
    """
    if not x0 <= band0 < band1 <= x1:
        raise ValueError("need x0 <= band0 < band1 <= x1")
    if h <= 0:
        raise ValueError("spacing must be positive")
    n = max(1, int(round((band1 - band0) / h)))
    band1 = band0 + n * h
    core = band0 + h * np.arange(n + 1)

    def _stretch(length):
        steps, s, w = [], 0.0, h
        while s < length - 1e-12 * max(length, h):
            w = w * ratio
            if s + w > length or length - (s + w) < 0.5 * w * ratio:
                w = length - s
            if w < h and steps:
                # fold a sliver into the previous cell
                steps[-1] += w
            else:
                steps.append(w)
            s += w
        return np.cumsum(steps)

    right = band1 + _stretch(max(0.0, x1 - band1))
    left = band0 - _stretch(max(0.0, band0 - x0))
    faces = np.concatenate([left[::-1], core, right])
    return faces


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid defined by face coordinates.

    Parameters
    ----------
    xf, yf : ndarray
        Face coordinates along x (radius in axisymmetric mode) and y.
    mode : {"planar", "axisymmetric"}
        Planar cells have unit depth; axisymmetric cells are rings about x = 0.
    """

    xf: np.ndarray
    yf: np.ndarray
    mode: str = "planar"

    def __post_init__(self):
        if self.mode not in ("planar", "axisymmetric"):
            raise ValueError(f"unknown grid mode {self.mode!r}")
        if np.any(np.diff(self.xf) <= 0) or np.any(np.diff(self.yf) <= 0):
            raise ValueError("face coordinates must be strictly increasing")
        if self.mode == "axisymmetric" and self.xf[0] < 0:
            raise ValueError("radial coordinate must be non-negative")

    @classmethod
    def uniform(cls, nx: int, ny: int, dx: float, mode: str = "planar", x0=0.0, y0=0.0):
        return cls(x0 + dx * np.arange(nx + 1), y0 + dx * np.arange(ny + 1), mode)

    @property
    def nx(self) -> int:
        return self.xf.size - 1

    @property
    def ny(self) -> int:
        return self.yf.size - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def dx(self) -> np.ndarray:
        return np.diff(self.xf)

    @property
    def dy(self) -> np.ndarray:
        return np.diff(self.yf)

    @property
    def xc(self) -> np.ndarray:
        return 0.5 * (self.xf[1:] + self.xf[:-1])

    @property
    def yc(self) -> np.ndarray:
        return 0.5 * (self.yf[1:] + self.yf[:-1])

    @property
    def min_spacing(self) -> float:
        return float(min(self.dx.min(), self.dy.min()))

    def _ring(self) -> np.ndarray:
        # measure of each x-column per unit y-length
        if self.mode == "planar":
            return self.dx
        return np.pi * (self.xf[1:] ** 2 - self.xf[:-1] ** 2)

    @property
    def volume(self) -> np.ndarray:
        return np.outer(self.dy, self._ring())

    @property
    def area_x(self) -> np.ndarray:
        """Areas of faces normal to x, shape (ny, nx + 1)."""
        w = np.ones_like(self.xf) if self.mode == "planar" else 2.0 * np.pi * self.xf
        return np.outer(self.dy, w)

    @property
    def area_y(self) -> np.ndarray:
        """Areas of faces normal to y, shape (ny + 1, nx)."""
        return np.outer(np.ones(self.ny + 1), self._ring())

    def mesh(self):
        return np.meshgrid(self.xc, self.yc)


def face_mean(grid: Grid, k: np.ndarray, kind: str = "arithmetic"):
    """Interior face values of a cell field, distance weighted.

    Returns
    -------
    kx : ndarray, shape (ny, nx - 1)
    ky : ndarray, shape (ny - 1, nx)
    """
    hx = 0.5 * grid.dx
    hy = 0.5 * grid.dy
    wl, wr = hx[:-1], hx[1:]
    wb, wt = hy[:-1, None], hy[1:, None]
    kl, kr = k[:, :-1], k[:, 1:]
    kb, kt = k[:-1, :], k[1:, :]
    if kind == "arithmetic":
        kx = (wr * kl + wl * kr) / (wl + wr)
        ky = (wt * kb + wb * kt) / (wb + wt)
    elif kind == "harmonic":
        with np.errstate(divide="ignore", invalid="ignore"):
            kx = np.where((kl > 0) & (kr > 0), (wl + wr) / (wl / kl + wr / kr), 0.0)
            ky = np.where((kb > 0) & (kt > 0), (wb + wt) / (wb / kb + wt / kt), 0.0)
    else:
        raise ValueError(f"unknown mean {kind!r}")
    return kx, ky


def transmissibility(grid: Grid, kx: np.ndarray, ky: np.ndarray):
    """Face conductances area * k / distance for interior faces."""
    dxc = np.diff(grid.xc)
    dyc = np.diff(grid.yc)
    tx = grid.area_x[:, 1:-1] * kx / dxc
    ty = grid.area_y[1:-1, :] * ky / dyc[:, None]
    return tx, ty


def open_faces(active: np.ndarray):
    """Boolean masks of interior faces whose two neighbours are both active."""
    return active[:, :-1] & active[:, 1:], active[:-1, :] & active[1:, :]


def flux_matrix(tx: np.ndarray, ty: np.ndarray) -> sp.csr_matrix:
    """Sparse operator ``(A u)_c = sum over faces of T (u_nb - u_c)``.

    Columns sum to zero, so the operator conserves the cell sum exactly.
    """
    ny = tx.shape[0]
    nx = tx.shape[1] + 1
    idx = np.arange(nx * ny).reshape(ny, nx)
    rows, cols, vals = [], [], []
    for a, b, t in ((idx[:, :-1], idx[:, 1:], tx), (idx[:-1, :], idx[1:, :], ty)):
        a, b, t = a.ravel(), b.ravel(), t.ravel()
        rows += [a, b, a, b]
        cols += [b, a, a, b]
        vals += [t, t, -t, -t]
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nx * ny, nx * ny))
    return A.tocsr()


def face_gradients(grid: Grid, u: np.ndarray):
    """Normal gradients at interior faces."""
    return np.diff(u, axis=1) / np.diff(grid.xc), np.diff(u, axis=0) / np.diff(grid.yc)[:, None]
