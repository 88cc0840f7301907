"""Physical constants and parameter sets for 304 stainless steel in 1 M NaCl.

All quantities are SI. Concentrations are in mol/m^3 (1 mol/L = 1000 mol/m^3).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants as _sc

FARADAY = _sc.physical_constants["Faraday constant"][0]
GAS_CONSTANT = _sc.R
TEMPERATURE = 298.15

# Species order used for every concentration array in the package.
SPECIES = ("M", "MOH", "H", "OH", "Na", "Cl")
N_SPECIES = len(SPECIES)
M, MOH, H, OH, NA, CL = range(N_SPECIES)


def f_over_rt(temperature: float = TEMPERATURE) -> float:
    return FARADAY / (GAS_CONSTANT * temperature)


@dataclass(frozen=True)
class PhaseFieldParams:
    """Interfacial energy, interface thickness and the derived double-well constants."""

    gamma: float = 2.10          # J/m^2
    ell: float = 5e-6            # m
    A: float = 1.02e8            # J/m^3, free-energy curvature
    L0: float = 1.2e-15          # m^3/(J s)

    def __post_init__(self):
        if self.gamma <= 0 or self.ell <= 0:
            raise ValueError("interfacial energy and interface thickness must be positive")
        if self.A <= 0 or self.L0 < 0:
            raise ValueError("A must be positive and L0 non-negative")

    @property
    def omega(self) -> float:
        return 3.0 * self.gamma / (4.0 * self.ell)

    @property
    def kappa(self) -> float:
        return 1.5 * self.gamma * self.ell


@dataclass(frozen=True)
class EquilibriumConcentrations:
    c_s_eq: float = 144.3e3      # mol/m^3
    c_l_eq: float = 5.1e3        # mol/m^3

    def __post_init__(self):
        if not 0.0 < self.c_l_eq < self.c_s_eq:
            raise ValueError("need 0 < c_l_eq < c_s_eq")

    @property
    def molar_volume(self) -> float:
        return 1.0 / self.c_s_eq

    @property
    def cbar_s(self) -> float:
        return 1.0

    @property
    def cbar_l(self) -> float:
        return self.c_l_eq / self.c_s_eq

    @property
    def dcbar(self) -> float:
        return self.cbar_s - self.cbar_l


@dataclass(frozen=True)
class KineticsParams:
    alpha: float = 0.26
    z1: float = 2.19
    E_eq: float = -0.729         # V vs SCE
    temperature: float = TEMPERATURE
    yield_strain: float = 1e-3
    exp_clip: float = 50.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.z1 <= 0 or self.temperature <= 0:
            raise ValueError("z1 and temperature must be positive")


@dataclass(frozen=True)
class CircuitParams:
    """First-order RC model of double-layer charging."""

    psi0: float
    chi: float = 120.0
    t_c: float = 10.0            # s
    xi: float = 1.0

    def __post_init__(self):
        if self.chi < 1.0:
            raise ValueError("chi must be >= 1 (R_dl >> R_l)")
        if self.t_c <= 0:
            raise ValueError("t_c must be positive")
        if self.xi <= 0:
            raise ValueError("geometric factor must be positive")

    def with_xi(self, xi: float) -> "CircuitParams":
        return replace(self, xi=xi)


def _default_charges(z1: float) -> np.ndarray:
    return np.array([z1, z1 - 1.0, 1.0, -1.0, 1.0, -1.0])


@dataclass(frozen=True)
class SpeciesParams:
    """Charges and liquid/solid diffusivities of the six ionic species."""

    z1: float = 2.19
    D_liquid: tuple = (0.719e-9, 0.719e-9, 9.311e-9, 5.273e-9, 1.334e-9, 2.032e-9)
    solid_ratio: float = 1e-4

    @property
    def z(self) -> np.ndarray:
        return _default_charges(self.z1)

    @property
    def D_l(self) -> np.ndarray:
        return np.asarray(self.D_liquid, dtype=float)

    @property
    def D_s(self) -> np.ndarray:
        return self.solid_ratio * self.D_l


@dataclass(frozen=True)
class ReactionParams:
    K1: float = 3.1622e-7        # mol/m^3
    K2: float = 1e-8             # mol^2/m^6
    k1b: float = 200.0           # m^3/(mol s)
    k2b: float = 1000.0          # m^3/(mol s)

    def __post_init__(self):
        if min(self.K1, self.K2, self.k1b, self.k2b) <= 0:
            raise ValueError("reaction constants must be positive")


@dataclass(frozen=True)
class ElasticConstants:
    C11: float = 209.0e9
    C12: float = 133.0e9
    C44: float = 121.0e9
    E: float = 199.0e9
    nu: float = 0.29


@dataclass(frozen=True)
class HardeningParams:
    sigma_y: float = 205e6
    eps0: float = 1e-3
    N: float = 0.2

    def flow_stress(self, ep):
        return self.sigma_y * (1.0 + np.asarray(ep) / self.eps0) ** self.N

    def flow_slope(self, ep):
        return self.sigma_y * self.N / self.eps0 * (1.0 + np.asarray(ep) / self.eps0) ** (self.N - 1.0)


@dataclass(frozen=True)
class MaterialParams:
    """Everything the coupled solver needs about metal and electrolyte."""

    phase: PhaseFieldParams = field(default_factory=PhaseFieldParams)
    conc: EquilibriumConcentrations = field(default_factory=EquilibriumConcentrations)
    kinetics: KineticsParams = field(default_factory=KineticsParams)
    species: SpeciesParams = field(default_factory=SpeciesParams)
    reactions: ReactionParams = field(default_factory=ReactionParams)
    elastic: ElasticConstants = field(default_factory=ElasticConstants)
    hardening: HardeningParams = field(default_factory=HardeningParams)
    lambda_s: float = 1e6        # S/m
    lambda_min: float = 1e-3     # S/m
    c_NaCl: float = 1000.0       # mol/m^3
    pH0: float = 7.0
    k_min: float = 1e-5
