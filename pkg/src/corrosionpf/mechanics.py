"""Small-strain plane-strain mechanics: anisotropic elasticity, J2 power-law plasticity, h(phi) degradation.

The metal rows of the finite-volume grid double as a mesh of bilinear (Q4)
elements with 2x2 Gauss integration. Stresses and strains use 6-component
Voigt vectors (xx, yy, zz, yz, xz, xy) with engineering shear strains.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .microstructure import cubic_stiffness, rotate_stiffness, voigt_shear_modulus  # noqa: F401
from .params import HardeningParams

_GP = np.array([-1.0, 1.0]) / np.sqrt(3.0)
# Gauss points in element order (xi, eta)
_GPTS = np.array([(x, y) for y in _GP for x in _GP])
# node order: (0,0), (1,0), (1,1), (0,1) in local (i, j) offsets
_NODE_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_NODE_ETA = np.array([-1.0, -1.0, 1.0, 1.0])
_PS = [0, 1, 5]          # in-plane Voigt rows
_SHEAR = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])


class MechanicsFailure(RuntimeError):
    pass


def hydrostatic_and_plastic_work(sigma, d_eps_p):
    """Hydrostatic stress tr(sigma)/3 and plastic work increment sigma : d_eps_p.

    Both arguments are Voigt arrays with the components on the last axis;
    ``d_eps_p`` uses engineering shear strains.
    """
    sigma = np.asarray(sigma, dtype=float)
    sh = (sigma[..., 0] + sigma[..., 1] + sigma[..., 2]) / 3.0
    dw = np.sum(sigma * np.asarray(d_eps_p, dtype=float), axis=-1)
    return sh, dw


def von_mises(sigma):
    s = np.asarray(sigma, dtype=float)
    p = (s[..., 0] + s[..., 1] + s[..., 2]) / 3.0
    d0, d1, d2 = s[..., 0] - p, s[..., 1] - p, s[..., 2] - p
    return np.sqrt(1.5 * (d0**2 + d1**2 + d2**2 + 2.0 * (s[..., 3]**2 + s[..., 4]**2 + s[..., 5]**2)))


def return_map_j2(eps, eps_p_old, ebar_old, C, G, hardening: HardeningParams = HardeningParams(),
                  tol: float | None = None, max_iter: int = 50):
    """Radial return for von Mises plasticity with power-law hardening.

    Parameters
    ----------
    eps, eps_p_old : ndarray, (..., 6)
        Total and previous plastic strain (engineering shear).
    ebar_old : ndarray, (...)
        Previous equivalent plastic strain.
    C : ndarray, (..., 6, 6) or (6, 6)
        Elastic stiffness used for the trial stress.
    G : float or ndarray
        Shear modulus of the plastic correction (isotropic projection of C).

    Returns
    -------
    sigma, eps_p, ebar, d_wp
        Intact stress, updated plastic strain, equivalent plastic strain and
        plastic work increment.
    """
    eps = np.asarray(eps, dtype=float)
    eps_p_old = np.asarray(eps_p_old, dtype=float)
    ebar_old = np.asarray(ebar_old, dtype=float)
    G = np.broadcast_to(np.asarray(G, dtype=float), ebar_old.shape)
    tol = 1e-10 * hardening.sigma_y if tol is None else tol
    sig_tr = np.einsum("...ij,...j->...i", C, eps - eps_p_old)
    p = (sig_tr[..., 0] + sig_tr[..., 1] + sig_tr[..., 2]) / 3.0
    s = sig_tr.copy()
    s[..., :3] -= p[..., None]
    q = von_mises(sig_tr)
    f_tr = q - hardening.flow_stress(ebar_old)
    plastic = f_tr > tol
    dg = np.zeros_like(q)
    if np.any(plastic):
        qp, Gp, eb = q[plastic], G[plastic], ebar_old[plastic]
        x = np.zeros_like(qp)
        for _ in range(max_iter):
            r = qp - 3.0 * Gp * x - hardening.flow_stress(eb + x)
            dr = -3.0 * Gp - hardening.flow_slope(eb + x)
            dx = -r / dr
            x = np.maximum(x + dx, 0.5 * x)
            if np.all(np.abs(r) <= tol):
                break
        else:
            raise MechanicsFailure("return map did not converge")
        dg[plastic] = x
    with np.errstate(invalid="ignore", divide="ignore"):
        nrm = np.where(q[..., None] > 0, 1.5 * s / q[..., None], 0.0)
    d_eps_p = dg[..., None] * nrm * _SHEAR           # engineering shear
    sigma = sig_tr - 2.0 * G[..., None] * dg[..., None] * nrm
    eps_p = eps_p_old + d_eps_p
    _, dw = hydrostatic_and_plastic_work(sigma, d_eps_p)
    return sigma, eps_p, ebar_old + dg, dw


def uniaxial_stress_curve(strains, C, G, hardening: HardeningParams = HardeningParams(),
                          tol: float = 1e-6):
    """Drive one material point in uniaxial stress along x.

    The lateral strains are iterated until every stress component except
    sigma_xx vanishes. Returns (sigma_xx, ebar) for each applied strain.
    """
    C = np.asarray(C, dtype=float)
    eps_p = np.zeros(6)
    ebar = np.asarray(0.0)
    eps = np.zeros(6)
    out_s, out_e = [], []

    def lateral(e_lat):
        trial = eps.copy()
        trial[1:] = e_lat
        return return_map_j2(trial, eps_p, ebar, C, G, hardening)

    for e in strains:
        eps[0] = e
        for _ in range(50):
            sig, ep_new, eb_new, _ = lateral(eps[1:])
            resid = sig[1:]
            if np.max(np.abs(resid)) <= tol * hardening.sigma_y:
                break
            # finite-difference consistent tangent of the lateral stresses
            J = np.empty((5, 5))
            h = 1e-9
            for k in range(5):
                pert = eps[1:].copy()
                pert[k] += h
                J[:, k] = (lateral(pert)[0][1:] - resid) / h
            eps[1:] -= np.linalg.solve(J, resid)
        else:
            raise MechanicsFailure("uniaxial driver did not converge")
        eps_p, ebar = ep_new, eb_new
        out_s.append(sig[0])
        out_e.append(float(ebar))
    return np.array(out_s), np.array(out_e)


def _shape_grads(a, b):
    """dN/dx and dN/dy at the four Gauss points of an a x b rectangle, shape (4gp, 4node)."""
    xi, eta = _GPTS[:, 0:1], _GPTS[:, 1:2]
    dN_dxi = 0.25 * _NODE_XI * (1.0 + eta * _NODE_ETA)
    dN_deta = 0.25 * _NODE_ETA * (1.0 + xi * _NODE_XI)
    return dN_dxi * 2.0 / a, dN_deta * 2.0 / b


@dataclass
class MechanicalState:
    """Nodal displacements and Gauss-point internal variables of the metal mesh."""

    u: np.ndarray             # (n_dof,)
    eps_p: np.ndarray         # (ne, 4, 6)
    ebar: np.ndarray          # (ne, 4)
    f_p: np.ndarray           # (ne, 4)
    sigma: np.ndarray         # (ne, 4, 6), degraded
    n_rows: int

    @classmethod
    def zeros(cls, nx: int, n_rows: int) -> "MechanicalState":
        ne = nx * n_rows
        return cls(np.zeros(2 * (nx + 1) * (n_rows + 1)), np.zeros((ne, 4, 6)), np.zeros((ne, 4)),
                   np.zeros((ne, 4)), np.zeros((ne, 4, 6)), n_rows)

    def copy(self) -> "MechanicalState":
        return MechanicalState(self.u.copy(), self.eps_p.copy(), self.ebar.copy(), self.f_p.copy(),
                               self.sigma.copy(), self.n_rows)

    def cell_fields(self, shape):
        """Cell averages of hydrostatic stress and equivalent plastic strain on the full grid."""
        ny, nx = shape
        sh = np.zeros(shape)
        eb = np.zeros(shape)
        s_h, _ = hydrostatic_and_plastic_work(self.sigma, np.zeros_like(self.sigma))
        sh[: self.n_rows] = s_h.mean(axis=1).reshape(self.n_rows, nx)
        eb[: self.n_rows] = self.ebar.mean(axis=1).reshape(self.n_rows, nx)
        return sh, eb


class PlaneStrainModel:
    """Q4 mesh over the bottom ``n_rows`` cell rows of a planar grid.

    Parameters
    ----------
    xf, yf : ndarray
        Face coordinates of the grid (only the first n_rows + 1 y-faces are used).
    stiffness : ndarray, (n_rows, nx, 6, 6)
        Intact element stiffness.
    """

    def __init__(self, xf, yf, n_rows: int, stiffness, hardening: HardeningParams = HardeningParams(),
                 k_min: float = 1e-5):
        self.xf = np.asarray(xf, dtype=float)
        self.yf = np.asarray(yf, dtype=float)[: n_rows + 1]
        self.nx = self.xf.size - 1
        self.n_rows = n_rows
        self.hardening = hardening
        self.k_min = k_min
        ne = self.nx * n_rows
        self.C = np.asarray(stiffness, dtype=float).reshape(ne, 6, 6)
        self.G = np.array([voigt_shear_modulus(c) for c in self.C])
        a = np.tile(np.diff(self.xf), n_rows)
        b = np.repeat(np.diff(self.yf), self.nx)
        self.detw = (a * b / 4.0)[:, None] * np.ones(4)       # Gauss weight 1 each
        gx, gy = zip(*(_shape_grads(ai, bi) for ai, bi in zip(a, b)))
        gx, gy = np.array(gx), np.array(gy)                   # (ne, 4gp, 4node)
        B = np.zeros((ne, 4, 3, 8))
        B[:, :, 0, 0::2] = gx
        B[:, :, 1, 1::2] = gy
        B[:, :, 2, 0::2] = gy
        B[:, :, 2, 1::2] = gx
        self.B = B
        nn = self.nx + 1
        j, i = np.divmod(np.arange(ne), self.nx)
        nodes = np.stack([j * nn + i, j * nn + i + 1, (j + 1) * nn + i + 1, (j + 1) * nn + i], axis=1)
        self.edof = np.empty((ne, 8), dtype=np.int64)
        self.edof[:, 0::2] = 2 * nodes
        self.edof[:, 1::2] = 2 * nodes + 1
        self.n_dof = 2 * nn * (n_rows + 1)

    def boundary_conditions(self, eps_inf: float):
        """Roller on the left and bottom edges, prescribed u_x on the right edge."""
        nn = self.nx + 1
        jn, in_ = np.divmod(np.arange(nn * (self.n_rows + 1)), nn)
        fixed, vals = [], []
        left = np.where(in_ == 0)[0]
        right = np.where(in_ == self.nx)[0]
        bottom = np.where(jn == 0)[0]
        width = self.xf[-1] - self.xf[0]
        fixed += list(2 * left)
        vals += [0.0] * left.size
        fixed += list(2 * right)
        vals += [eps_inf * width] * right.size
        fixed += list(2 * bottom + 1)
        vals += [0.0] * bottom.size
        return np.array(fixed), np.array(vals)

    def strains(self, u):
        ue = u[self.edof]                                        # (ne, 8)
        e2 = np.einsum("egij,ej->egi", self.B, ue)               # exx, eyy, gxy
        eps = np.zeros(e2.shape[:2] + (6,))
        eps[..., 0] = e2[..., 0]
        eps[..., 1] = e2[..., 1]
        eps[..., 5] = e2[..., 2]
        return eps

    def _stress(self, u, deg, state: MechanicalState):
        eps = self.strains(u)
        C = self.C[:, None]
        G = np.repeat(self.G[:, None], 4, axis=1)
        s0, ep, eb, dw = return_map_j2(eps, state.eps_p, state.ebar, C, G, self.hardening)
        return deg[:, None, None] * s0, ep, eb, dw, s0

    def internal_force(self, sigma):
        f_e = np.einsum("egij,egi,eg->ej", self.B, sigma[..., _PS], self.detw)
        return np.bincount(self.edof.ravel(), weights=f_e.ravel(), minlength=self.n_dof)

    def stiffness(self, deg):
        D = self.C[:, _PS][:, :, _PS] * deg[:, None, None]
        Ke = np.einsum("egki,ekl,eglj,eg->eij", self.B, D, self.B, self.detw)
        rows = np.repeat(self.edof, 8, axis=1).ravel()
        cols = np.tile(self.edof, (1, 8)).ravel()
        return sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(self.n_dof, self.n_dof)).tocsr()

    def solve(self, h_cells, eps_inf: float, state: MechanicalState, rtol: float = 1e-8,
              max_iter: int = 300) -> MechanicalState:
        """Quasi-static equilibrium by modified Newton with the degraded elastic stiffness.

        ``h_cells`` is h(phi) on the metal rows, shape (n_rows, nx).
        """
        deg = np.asarray(h_cells, dtype=float).ravel() + self.k_min
        fixed, vals = self.boundary_conditions(eps_inf)
        free = np.setdiff1d(np.arange(self.n_dof), fixed)
        u = state.u.copy()
        u[fixed] = vals
        K = self.stiffness(deg)
        lu = spla.splu(K[free][:, free].tocsc())
        ref = None
        for it in range(max_iter):
            sigma, ep, eb, dw, s0 = self._stress(u, deg, state)
            f = self.internal_force(sigma)
            if ref is None or it == 0:
                ref = max(np.linalg.norm(f[fixed]), 1e-30)
            r = f[free]
            ref = max(ref, np.linalg.norm(f[fixed]))
            if np.linalg.norm(r) <= rtol * ref or ref <= 1e-30:
                break
            u[free] -= lu.solve(r)
        else:
            raise MechanicsFailure(f"equilibrium not reached, residual {np.linalg.norm(r) / ref:.2e}")
        _, dwd = hydrostatic_and_plastic_work(sigma, ep - state.eps_p)
        return MechanicalState(u, ep, eb, state.f_p + np.maximum(dwd, 0.0), sigma, self.n_rows)

    def reactions(self, state: MechanicalState):
        """Net x-reaction on the left and right edges."""
        f = self.internal_force(state.sigma)
        nn = self.nx + 1
        jn, in_ = np.divmod(np.arange(nn * (self.n_rows + 1)), nn)
        return f[2 * np.where(in_ == 0)[0]].sum(), f[2 * np.where(in_ == self.nx)[0]].sum()
