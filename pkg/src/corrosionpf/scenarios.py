"""Scenario definitions, damage metrics and run drivers.

Three geometries are provided:

``stefan``
    One planar column with electromigration, reactions and the double layer
    switched off (a diffusion-controlled dissolution benchmark).
``pencil``
    Axisymmetric wire of radius ``wire_radius`` embedded in an insulating
    sleeve, dissolving into an electrolyte column above it.
``pitting``
    Planar metal block covered by a thin protective film with a semicircular
    breach at mid-width, optionally polycrystalline and strained.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from .electrostatics import contour_length
from .energetics import h_func
from .grid import ELECTROLYTE, METAL, PROTECTIVE, Grid, graded_faces
from .mechanics import PlaneStrainModel
from .microstructure import Microstructure, generate_microstructure, isotropic_stiffness
from .params import FARADAY, CircuitParams, MaterialParams, PhaseFieldParams
from .solver import SimState, Setup, SolverOptions, init_state, run

log = logging.getLogger(__name__)

KINDS = ("stefan", "pencil", "pitting")


@dataclass
class ScenarioConfig:
    """Everything needed to build and run one simulation.

    Lengths are in metres, potentials in volts vs SCE and times in seconds.
    """

    kind: str = "pitting"
    E_app: float = 0.6
    delta_E_max: float = 0.0
    eps_inf: float = 0.0
    microstructure: bool = False
    grain_size: float = 20e-6
    seed: int = 0
    # grid
    dx: float = 1.25e-6
    grade_ratio: float = 1.2
    # geometry
    width: float = 60e-6
    metal_depth: float = 30e-6
    electrolyte_height: float = 200e-6
    band_above: float = 10e-6
    wire_radius: float = 25e-6
    bath_radius: float = 25e-6
    radial_cells: int = 0
    defect_radius: float = 6e-6
    protective_thickness: float = 1e-6
    # physics
    L0: float = 1.2e-15
    chi: float = 120.0
    t_c: float = 10.0
    electromigration: bool = True
    reactions: bool = True
    edl: bool = True
    mechanics: bool | None = None
    fixed_xi: bool | None = None
    # time
    t_end: float = 100.0
    dt_max: float = 0.2
    dt_init: float = 0.01
    output_interval: float = 10.0
    log_outputs: int = 0
    # output
    out_dir: str = "out"
    snapshot_every: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ValueError(f"scenario.kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("dx", "width", "metal_depth", "electrolyte_height", "t_end", "dt_max", "dt_init",
                     "L0", "t_c", "wire_radius", "grain_size"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.delta_E_max < 0:
            raise ValueError("delta_E_max must be non-negative")
        if self.kind == "pitting" and self.defect_radius >= self.metal_depth:
            raise ValueError("defect_radius must be smaller than metal_depth")
        if self.kind == "pitting" and 2 * self.defect_radius >= self.width:
            raise ValueError("defect must fit inside the width")
        if self.kind == "pencil" and self.bath_radius < self.wire_radius:
            raise ValueError("bath_radius must be at least wire_radius")

    @classmethod
    def preset(cls, kind: str, **overrides) -> "ScenarioConfig":
        """Desk-scale defaults for a scenario kind, updated by ``overrides``."""
        if kind not in PRESETS:
            raise ValueError(f"scenario.kind must be one of {KINDS}, got {kind!r}")
        return cls(**{**PRESETS[kind], "kind": kind, **overrides})

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)

    def output_times(self):
        if self.log_outputs:
            return np.geomspace(self.t_end / 10 ** 2.5, self.t_end, self.log_outputs)
        n = max(1, int(round(self.t_end / self.output_interval)))
        return np.linspace(self.t_end / n, self.t_end, n)


PRESETS = {
    # planar dissolution column with transport-only physics
    "stefan": dict(metal_depth=40e-6, electrolyte_height=3e-3, band_above=20e-6, electromigration=False,
                   reactions=False, edl=False, t_end=100.0, output_interval=10.0),
    # wire cross-section in its sleeve; the tall column stands in for the bath
    "pencil": dict(metal_depth=100e-6, electrolyte_height=5e-3, t_end=1000.0, log_outputs=31),
    "pitting": dict(),
}


@dataclass
class Built:
    setup: Setup
    phi0: np.ndarray
    microstructure: Microstructure | None = None
    config: ScenarioConfig = field(default_factory=ScenarioConfig)


def _vertical_faces(cfg: ScenarioConfig) -> np.ndarray:
    ys = cfg.metal_depth
    top = ys + cfg.electrolyte_height
    band_top = min(ys + cfg.band_above, top)
    if band_top >= top:
        n = int(round(top / cfg.dx))
        return np.linspace(0.0, n * cfg.dx, n + 1)
    return graded_faces(0.0, 0.0, band_top, top, cfg.dx, cfg.grade_ratio)


def build(cfg: ScenarioConfig, material: MaterialParams | None = None) -> Built:
    """Grid, region tags, initial phase field and static run data for a scenario."""
    material = material or MaterialParams()
    material = dataclasses.replace(material, phase=dataclasses.replace(material.phase, L0=cfg.L0))
    ell = material.phase.ell
    yf = _vertical_faces(cfg)
    # the metal surface sits on a face
    ys = yf[np.argmin(np.abs(yf - cfg.metal_depth))]
    if cfg.kind == "pencil":
        a = cfg.wire_radius
        if cfg.bath_radius > a * (1 + 1e-9):
            xf = graded_faces(0.0, 0.0, a, cfg.bath_radius, cfg.dx, cfg.grade_ratio)
        else:
            # a bare column has no radial gradients; one ring reproduces it exactly
            n = cfg.radial_cells or 1
            xf = np.linspace(0.0, a, n + 1)
        grid = Grid(xf, yf, "axisymmetric")
    elif cfg.kind == "stefan":
        grid = Grid(np.array([0.0, cfg.dx]), yf, "planar")
    else:
        n = int(round(cfg.width / cfg.dx))
        grid = Grid(np.linspace(0.0, n * cfg.dx, n + 1), yf, "planar")
    X, Y = grid.mesh()
    tag = np.where(Y < ys, METAL, ELECTROLYTE)
    if cfg.kind == "pencil":
        a = grid.xf[np.argmin(np.abs(grid.xf - cfg.wire_radius))]
        tag[(Y < ys) & (X > a)] = PROTECTIVE
        phi0 = 0.5 * (1.0 - np.tanh(2.0 * (Y - ys) / ell))
        phi0[(X > a) & (Y >= ys)] = 0.0
        exposed = np.pi * a**2
    elif cfg.kind == "stefan":
        phi0 = 0.5 * (1.0 - np.tanh(2.0 * (Y - ys) / ell))
        exposed = grid.xf[-1] - grid.xf[0]
    else:
        cx = 0.5 * (grid.xf[0] + grid.xf[-1])
        r = np.hypot(X - cx, Y - ys)
        phi0 = np.where(Y < ys, 0.5 * (1.0 - np.tanh(2.0 * (cfg.defect_radius - r) / ell)), 0.0)
        film = (Y < ys) & (Y > ys - max(cfg.protective_thickness, 0.0)) & (np.abs(X - cx) > cfg.defect_radius)
        if cfg.protective_thickness > 0:
            # at least the top metal row outside the breach
            film |= (Y < ys) & (Y > ys - grid.dy[np.searchsorted(grid.yc, ys) - 1]) & \
                (np.abs(X - cx) > cfg.defect_radius)
        tag[film] = PROTECTIVE
        exposed = 2.0 * cfg.defect_radius
    phi0 = np.where(tag == PROTECTIVE, 1.0, phi0)

    ms = None
    delta_E = np.zeros(grid.shape)
    metal_rows = int(np.searchsorted(grid.yc, ys))
    if cfg.kind == "pitting" and cfg.microstructure:
        ms = generate_microstructure((grid.xf[0], 0.0, grid.xf[-1] - grid.xf[0], ys), cfg.grain_size, cfg.seed,
                                     xc=grid.xc, yc=grid.yc[:metal_rows], delta_E_max=cfg.delta_E_max,
                                     elastic=material.elastic)
        delta_E[:metal_rows] = ms.cell_delta_E()
    use_mech = cfg.mechanics if cfg.mechanics is not None else (cfg.kind == "pitting" and cfg.eps_inf != 0.0)
    mech_model = None
    if use_mech:
        if grid.mode != "planar":
            raise ValueError("mechanics is only available on planar grids")
        if ms is not None:
            stiff = ms.stiffness[ms.grain_id]
        else:
            C = isotropic_stiffness(material.elastic.E, material.elastic.nu)
            stiff = np.broadcast_to(C, (metal_rows, grid.nx, 6, 6))
        mech_model = PlaneStrainModel(grid.xf, grid.yf, metal_rows, stiff, material.hardening, material.k_min)
    opts = SolverOptions(dt_max=cfg.dt_max, dt_init=min(cfg.dt_init, cfg.dt_max),
                         electromigration=cfg.electromigration, reactions=cfg.reactions,
                         edl=cfg.edl,
                         fixed_xi=cfg.fixed_xi if cfg.fixed_xi is not None else cfg.kind != "pitting")
    circuit = CircuitParams(psi0=cfg.E_app - material.kinetics.E_eq, chi=cfg.chi, t_c=cfg.t_c)
    active = tag != PROTECTIVE
    setup = Setup(grid, tag, material, cfg.E_app, circuit, delta_E, opts, cfg.eps_inf, mech_model,
                  exposed, float(ys), 0.0)
    setup.initial_length = contour_length(grid, phi0, active)
    return Built(setup, phi0, ms, cfg)


# -- metrics -------------------------------------------------------------------

def pit_depth(setup: Setup, phi: np.ndarray) -> float:
    """Deepest phi = 1/2 crossing below the original surface over all metal columns."""
    grid = setup.grid
    yc = grid.yc
    best = 0.0
    for i in np.where(np.any(setup.tag == METAL, axis=0))[0]:
        col = phi[:, i]
        if col[0] < 0.5:
            # dissolved down to the bottom of the grid
            best = max(best, setup.surface_y - grid.yf[0])
            continue
        below = np.where(col < 0.5)[0]
        if below.size == 0:
            continue
        k = below[0]
        f0, f1 = col[k - 1], col[k]
        y = yc[k - 1] + (f0 - 0.5) / (f0 - f1) * (yc[k] - yc[k - 1])
        best = max(best, setup.surface_y - y)
    return float(best)


def dissolved_measure(setup: Setup, phi0: np.ndarray, phi: np.ndarray) -> float:
    """Integral of h(phi0) - h(phi) over all non-protective cells."""
    return float(np.sum((h_func(phi0) - h_func(phi)) * setup.grid.volume * setup.active))


def compute_metrics(setup: Setup, state: SimState, phi0: np.ndarray, prev=None) -> dict:
    """Damage metrics of ``state`` relative to the initial phase field.

    ``prev`` is the previous metrics record; the current density is the mean
    over the interval since then.
    """
    diss = dissolved_measure(setup, phi0, state.phi)
    if prev is not None and state.t > prev["t"]:
        mat = setup.material
        rate = (diss - prev["dissolved_area"]) / (state.t - prev["t"])
        cur = mat.kinetics.z1 * FARADAY * rate / (mat.conc.molar_volume * setup.exposed_area)
    else:
        cur = 0.0
    depth = pit_depth(setup, state.phi)
    return {"t": state.t, "pit_depth": depth, "dissolved_area": diss, "current_density": cur,
            "interface_length": contour_length(setup.grid, state.phi, setup.active), "xi": state.xi,
            "max_defect_depth": depth}


METRIC_COLUMNS = ("t", "pit_depth", "dissolved_area", "current_density", "interface_length", "xi")


def growth_exponent(t, d, decades: float = 1.0) -> float:
    """Slope of log d against log t over the last ``decades`` of time."""
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    m = (t >= t[-1] / 10**decades) & (d > 0)
    return float(np.polyfit(np.log(t[m]), np.log(d[m]), 1)[0])


def simulate(cfg: ScenarioConfig, material: MaterialParams | None = None, callback=None,
             max_wall_sec=None, checkpoint=None, state: SimState | None = None, records=None):
    """Build, initialise and run a scenario; returns (built, final state, metric records).

    Passing ``state`` (and the ``records`` written so far) resumes a run.
    """
    built = build(cfg, material)
    setup = built.setup
    if state is None:
        state = init_state(setup, built.phi0)
    phi0 = np.where(setup.tag == PROTECTIVE, 1.0, built.phi0)
    records = list(records or [])
    if not records:
        records = [compute_metrics(setup, state, phi0)] if state.t == 0 else []
    if callback is not None and state.t == 0:
        callback(built, state, records)

    def _cb(s):
        records.append(compute_metrics(setup, s, phi0, records[-1] if records else None))
        if callback is not None:
            callback(built, s, records)

    final = run(setup, state, cfg.t_end, cfg.output_times(), _cb, max_wall_sec, checkpoint)
    return built, final, records


__all__ = ["ScenarioConfig", "build", "simulate", "compute_metrics", "pit_depth", "dissolved_measure",
           "growth_exponent", "METRIC_COLUMNS", "PhaseFieldParams"]
