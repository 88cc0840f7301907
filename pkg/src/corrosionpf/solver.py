"""Staggered time integration: mechanics, geometric factor, potential, kinetics, phase field, species.

A :class:`Setup` holds everything that stays fixed during a run; a
:class:`SimState` holds the evolving fields. :func:`time_step` is pure: it
returns a new state and leaves its input untouched, so a rejected step can be
retried with a smaller increment.
"""
from __future__ import annotations

import logging
import struct
import time as _time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import electrochemistry as ec
from .electrostatics import (PotentialFailure, conductivity_field, contour_length, edl_boundary_potential,
                             electrolyte_conductivity, solve_potential)
from .energetics import h_func
from .grid import ELECTROLYTE, METAL, PROTECTIVE, Grid
from .mechanics import MechanicalState, MechanicsFailure, PlaneStrainModel
from .params import M, CircuitParams, MaterialParams
from .phasefield import PhaseFieldFailure, extend_mobility, step_coupled, step_phase
from .transport import species_operator, step_species

log = logging.getLogger(__name__)


class SolverFailure(RuntimeError):
    """A time step failed at the smallest allowed increment."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class SolverOptions:
    dt_max: float = 0.2
    dt_init: float = 0.01
    dt_min: float = 1e-7
    grow: float = 1.2
    dphi_max: float = 0.1
    electromigration: bool = True
    reactions: bool = True
    fixed_xi: bool = False
    edl: bool = True
    adaptive: bool = True
    coupled: bool = True


@dataclass
class Setup:
    """Static description of a run: grid, regions, material, loading and options."""

    grid: Grid
    tag: np.ndarray
    material: MaterialParams
    E_app: float
    circuit: CircuitParams
    delta_E: np.ndarray
    options: SolverOptions = field(default_factory=SolverOptions)
    eps_inf: float = 0.0
    mech_model: PlaneStrainModel | None = None
    exposed_area: float = 1.0
    surface_y: float = 0.0
    initial_length: float = 0.0

    @property
    def active(self) -> np.ndarray:
        return self.tag != PROTECTIVE

    @property
    def bottom_mask(self) -> np.ndarray:
        return self.tag[0] == METAL

    @property
    def top_mask(self) -> np.ndarray:
        return self.tag[-1] == ELECTROLYTE


@dataclass
class SimState:
    phi: np.ndarray
    c: np.ndarray
    psi: np.ndarray
    t: float = 0.0
    step: int = 0
    xi: float = 1.0
    dt: float = 0.01
    mech: MechanicalState | None = None
    sigma_h: np.ndarray | None = None
    ebar: np.ndarray | None = None
    mobility: np.ndarray | None = None

    def copy(self) -> "SimState":
        return replace(self, phi=self.phi.copy(), c=self.c.copy(), psi=self.psi.copy(),
                       mech=None if self.mech is None else self.mech.copy())


def initial_concentrations(phi: np.ndarray, material: MaterialParams, active=None) -> np.ndarray:
    """Metal ions at the site density in the solid; neutral pH-7 NaCl in the liquid."""
    h = h_func(phi)
    liq = 1.0 - h
    c = np.empty((6,) + phi.shape)
    c_ph = 1000.0 * 10.0 ** (-material.pH0)
    c[0] = material.conc.c_s_eq * h
    c[1] = 0.0
    c[2] = c_ph * liq
    c[3] = c_ph * liq
    c[4] = material.c_NaCl * liq
    c[5] = material.c_NaCl * liq
    if active is not None:
        c[:, ~active] = 0.0
    return np.maximum(c, 1e-30)


def init_state(setup: Setup, phi0: np.ndarray) -> SimState:
    phi0 = np.where(setup.tag == PROTECTIVE, 1.0, phi0)
    c = initial_concentrations(phi0, setup.material, setup.active)
    mech = None
    if setup.mech_model is not None:
        mech = MechanicalState.zeros(setup.grid.nx, setup.mech_model.n_rows)
    return SimState(phi0.copy(), c, np.zeros(setup.grid.shape), dt=setup.options.dt_init, mech=mech)


def _mechanics(setup: Setup, state: SimState):
    if setup.mech_model is None or state.mech is None:
        z = np.zeros(setup.grid.shape)
        return None, z, z
    n = setup.mech_model.n_rows
    h = h_func(np.clip(state.phi[:n], 0.0, 1.0))
    mech = setup.mech_model.solve(h, setup.eps_inf, state.mech)
    sh, eb = mech.cell_fields(setup.grid.shape)
    return mech, sh, eb


def _potential(setup: Setup, state: SimState, t_new: float, xi: float):
    mat = setup.material
    sp_ = mat.species
    h = h_func(state.phi)
    c_liq = state.c.copy()
    c_liq[M] = np.maximum(state.c[M] - (mat.conc.c_s_eq - mat.conc.c_l_eq) * h, 0.0)
    lam_l = electrolyte_conductivity(c_liq, sp_.D_l, sp_.z, mat.kinetics.temperature, mat.lambda_min)
    lam = conductivity_field(state.phi, lam_l, mat.lambda_s)
    cp = setup.circuit.with_xi(xi)
    psi_dl = float(edl_boundary_potential(t_new, cp)) if setup.options.edl else 0.0
    psi = solve_potential(setup.grid, lam, setup.active, setup.bottom_mask, setup.top_mask, psi_dl, 0.0)
    return psi, psi_dl


def mobility_field(setup: Setup, phi, psi, sigma_h, ebar):
    mat = setup.material
    eta = ec.overpotential(setup.E_app, mat.kinetics.E_eq, setup.delta_E, psi)
    L = ec.mobility(mat.phase.L0, eta, ebar, sigma_h, mat.kinetics, mat.conc.molar_volume)
    return extend_mobility(phi, L, setup.active)


def time_step(setup: Setup, state: SimState, dt: float) -> SimState:
    """One staggered step of length ``dt``; raises on any sub-solver failure."""
    if not 0 < dt:
        raise ValueError("dt must be positive")
    opts = setup.options
    mat = setup.material
    t_new = state.t + dt
    stage = "mechanics"
    try:
        mech, sh, eb = _mechanics(setup, state)
        stage = "geometry"
        xi = state.xi
        if not opts.fixed_xi and setup.initial_length > 0:
            length = contour_length(setup.grid, state.phi, setup.active)
            xi = length / setup.initial_length if length > 0 else state.xi
        stage = "potential"
        psi, _ = _potential(setup, state, t_new, xi)
        stage = "kinetics"
        L = mobility_field(setup, state.phi, psi, sh, eb)
        stage = "phase field"
        sp_ = mat.species
        dc_eq = mat.conc.c_s_eq - mat.conc.c_l_eq
        if opts.coupled:
            def operator(ph):
                return species_operator(setup.grid, ph, psi, sp_.D_l[M], sp_.D_s[M], sp_.z[M],
                                        setup.active, opts.electromigration, mat.kinetics.temperature)

            phi, c1, _ = step_coupled(setup.grid, state.phi, state.c[M], L, dt, mat.phase, mat.conc,
                                      operator, setup.active)
            c_pre = state.c.copy()
            c_pre[M] = c1
            rest = [i for i in range(state.c.shape[0]) if i != M]
        else:
            # sequential update: phase field at the old concentration, then transport
            cbar = state.c[M] * mat.conc.molar_volume
            phi, _ = step_phase(setup.grid, state.phi, cbar, L, dt, mat.phase, mat.conc, setup.active)
            c_pre, rest = state.c, None
        if np.max(np.abs(phi - state.phi)) > opts.dphi_max:
            raise PhaseFieldFailure("phase-field change per step above limit")
        stage = "transport"
        c, _ = step_species(setup.grid, c_pre, phi, psi, dt, sp_.D_l, sp_.D_s, sp_.z, setup.active,
                            dc_eq, mat.reactions if opts.reactions else None,
                            opts.electromigration, mat.kinetics.temperature, species=rest)
    except (PhaseFieldFailure, PotentialFailure, MechanicsFailure, FloatingPointError,
            np.linalg.LinAlgError, RuntimeError) as exc:
        raise SolverFailure(stage, str(exc)) from exc
    return SimState(phi, c, psi, t_new, state.step + 1, xi, state.dt, mech, sh, eb, L)


def advance(setup: Setup, state: SimState, t_target: float) -> SimState:
    """Adaptive stepping up to exactly ``t_target``."""
    opts = setup.options
    while state.t < t_target * (1.0 - 1e-12):
        dt = min(state.dt, opts.dt_max, t_target - state.t)
        try:
            new = time_step(setup, state, dt)
        except SolverFailure as exc:
            if not opts.adaptive or dt * 0.5 < opts.dt_min:
                raise
            log.debug("step rejected at t=%.4g dt=%.3g: %s", state.t, dt, exc)
            state = replace(state, dt=0.5 * dt)
            continue
        # a step shortened to land on an output time keeps the running increment
        if opts.adaptive and dt >= state.dt:
            new.dt = min(state.dt * opts.grow, opts.dt_max)
        else:
            new.dt = state.dt
        state = new
    return state


def run(setup: Setup, state: SimState, t_end: float, output_times,
        callback: Callable[[SimState], None] | None = None, max_wall_sec: float | None = None,
        checkpoint: Callable[[SimState], None] | None = None) -> SimState:
    """Integrate to ``t_end`` and call ``callback`` at every output time."""
    start = _time.monotonic()
    for t_out in sorted(set(float(t) for t in output_times if state.t < t <= t_end) | {float(t_end)}):
        state = advance(setup, state, t_out)
        if callback is not None:
            callback(state)
        if max_wall_sec is not None and _time.monotonic() - start > max_wall_sec and state.t < t_end:
            if checkpoint is not None:
                checkpoint(state)
            raise BudgetExceeded(f"wall-clock budget of {max_wall_sec} s exceeded at t = {state.t:.4g} s")
    return state


# -- checkpoints -------------------------------------------------------------

_MAGIC = b"CPFCHK"
_VERSION = 1
_HEAD = struct.Struct("<6sIIIIII")
_SCAL = struct.Struct("<dddQ")


def save_checkpoint(path, state: SimState) -> None:
    """Binary dump: header (magic, version, ny, nx, n_species, has_mech, mech_rows),
    scalars (t, dt, xi, step), then little-endian float64 arrays in row-major order:
    phi, c, psi and, with mechanics, u, eps_p, ebar, f_p, sigma."""
    ny, nx = state.phi.shape
    has_mech = state.mech is not None
    rows = state.mech.n_rows if has_mech else 0
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(_MAGIC, _VERSION, ny, nx, state.c.shape[0], int(has_mech), rows))
        fh.write(_SCAL.pack(state.t, state.dt, state.xi, state.step))
        arrays = [state.phi, state.c, state.psi]
        if has_mech:
            m = state.mech
            arrays += [m.u, m.eps_p, m.ebar, m.f_p, m.sigma]
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path) -> SimState:
    with open(path, "rb") as fh:
        magic, version, ny, nx, ns, has_mech, rows = _HEAD.unpack(fh.read(_HEAD.size))
        if magic != _MAGIC or version != _VERSION:
            raise ValueError(f"{path}: not a version-{_VERSION} checkpoint")
        t, dt, xi, step = _SCAL.unpack(fh.read(_SCAL.size))

        def take(*shape):
            n = int(np.prod(shape))
            return np.frombuffer(fh.read(8 * n), dtype="<f8").reshape(shape).astype(float)

        phi, c, psi = take(ny, nx), take(ns, ny, nx), take(ny, nx)
        mech = None
        if has_mech:
            ne = nx * rows
            mech = MechanicalState(take(2 * (nx + 1) * (rows + 1)), take(ne, 4, 6), take(ne, 4),
                                   take(ne, 4), take(ne, 4, 6), rows)
    return SimState(phi, c, psi, t, int(step), xi, dt, mech)
