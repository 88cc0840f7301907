"""Fast self-checks behind ``corrosionpf validate``.

Each check compares a library routine with an independent closed form and
returns (name, passed, detail). The full test suite lives in ``tests/``.
"""
from __future__ import annotations

import numpy as np

from .electrostatics import edl_boundary_potential
from .energetics import f_chem_and_derivs, gamma_from_params, interface_energy, equilibrium_profile
from .mechanics import uniaxial_stress_curve
from .microstructure import (cubic_stiffness, random_orientations, rotate_stiffness, rotation_matrix,
                             voigt_shear_modulus, voigt_to_tensor, tensor_to_voigt)
from .params import CircuitParams, ElasticConstants, EquilibriumConcentrations, HardeningParams, PhaseFieldParams


def _interface_energy():
    pf = PhaseFieldParams()
    dx = pf.ell / 50
    x = np.arange(-40 * pf.ell, 40 * pf.ell, dx)
    gam = interface_energy(equilibrium_profile(x, pf.ell), dx, pf)
    err = abs(gam - 2.10) / 2.10
    return "interface energy", err < 0.02 and abs(gamma_from_params(pf.omega, pf.kappa) - 2.10) < 1e-12, \
        f"Gamma = {gam:.5f} J/m^2 (rel err {err:.1e})"


def _derivatives():
    pf, conc = PhaseFieldParams(), EquilibriumConcentrations()
    rng = np.random.default_rng(1)
    phi = rng.uniform(0.05, 0.95, 200)
    c = rng.uniform(0.0, 1.0, 200)
    _, dc, dp = f_chem_and_derivs(c, phi, pf, conc)
    h = 1e-6
    num_p = (f_chem_and_derivs(c, phi + h, pf, conc)[0] - f_chem_and_derivs(c, phi - h, pf, conc)[0]) / (2 * h)
    num_c = (f_chem_and_derivs(c + h, phi, pf, conc)[0] - f_chem_and_derivs(c - h, phi, pf, conc)[0]) / (2 * h)
    scale = pf.A + pf.omega
    err = max(np.max(np.abs(num_p - dp)), np.max(np.abs(num_c - dc))) / scale
    return "free-energy derivatives", err < 1e-6, f"max scaled error {err:.1e}"


def _edl():
    cp = CircuitParams(psi0=1.329)
    t = np.linspace(0, 200, 401)
    psi = edl_boundary_potential(t, cp)
    ok = abs(psi[0] - 1.329) < 1e-12 and abs(edl_boundary_potential(1e6, cp) - 1.329 / 121) < 1e-12 \
        and np.all(np.diff(psi) < 0)
    return "double-layer potential", ok, f"psi(0) = {psi[0]:.4f} V, psi(inf) = {1.329 / 121:.5f} V"


def _rotation():
    el = ElasticConstants()
    C = cubic_stiffness(el.C11, el.C12, el.C44)
    eul = random_orientations(20, np.random.default_rng(2))
    err = 0.0
    for e in eul:
        R = rotation_matrix(e)
        ref = tensor_to_voigt(np.einsum("ip,jq,kr,ls,pqrs->ijkl", R, R, R, R, voigt_to_tensor(C)))
        err = max(err, np.max(np.abs(rotate_stiffness(C, R) - ref)) / el.C11)
    return "stiffness rotation", err < 1e-10, f"max rel error {err:.1e}"


def _hardening():
    el, hp = ElasticConstants(), HardeningParams()
    C = cubic_stiffness(el.C11, el.C12, el.C44)
    s, eb = uniaxial_stress_curve(np.linspace(0.0, 0.01, 41), C, voigt_shear_modulus(C), hp)
    plastic = eb > 1e-6
    err = np.max(np.abs(s[plastic] - hp.flow_stress(eb[plastic])) / hp.flow_stress(eb[plastic]))
    return "uniaxial hardening", err < 1e-3, f"max rel error {err:.1e}"


CHECKS = (_interface_energy, _derivatives, _edl, _rotation, _hardening)


def run_checks():
    return [chk() for chk in CHECKS]
