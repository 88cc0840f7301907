import numpy as np
import pytest
from hypothesis import given, strategies as st

from corrosionpf.grid import Grid
from corrosionpf.params import CL, H, M, MOH, NA, OH, ReactionParams, SpeciesParams
from corrosionpf.transport import (effective_diffusivity, ph_poh, react, reaction_rates, species_fluxes,
                                   species_operator, step_species, total_amount)

SP = SpeciesParams()
RP = ReactionParams()


def _uniform_liquid(nx, ny, dx):
    g = Grid.uniform(nx, ny, dx)
    return g, np.zeros(g.shape), np.ones(g.shape, bool)


def test_effective_diffusivity_limits():
    assert effective_diffusivity(2.0, 1.0, 0.0) == 2.0
    assert effective_diffusivity(2.0, 1.0, 1.0) == 1.0


def test_gaussian_heat_kernel():
    # 1D diffusion of a Gaussian: variance grows by 2 D t
    nx, dx = 400, 1e-6
    g, phi, act = _uniform_liquid(nx, 1, dx)
    x = (np.arange(nx) + 0.5) * dx - 200e-6
    s0 = 10e-6
    c = np.zeros((6,) + g.shape)
    c[NA, 0] = np.exp(-x ** 2 / (2 * s0 ** 2))
    D = SP.D_l
    t_end, n = 0.05, 200
    for _ in range(n):
        c, _ = step_species(g, c, phi, np.zeros(g.shape), t_end / n, SP.D_l, SP.D_s, SP.z, act, 0.0,
                            electromigration=False, species=[NA])
    var = np.sum(x ** 2 * c[NA, 0]) / np.sum(c[NA, 0])
    assert var == pytest.approx(s0 ** 2 + 2 * D[NA] * t_end, rel=1e-2)


def test_conservation_with_migration():
    rng = np.random.default_rng(3)
    g = Grid(np.cumsum(np.r_[0, rng.uniform(0.5, 1.5, 12)]) * 1e-6,
             np.cumsum(np.r_[0, rng.uniform(0.5, 1.5, 9)]) * 1e-6, "axisymmetric")
    phi = np.zeros(g.shape)
    act = np.ones(g.shape, bool)
    act[0, :3] = False
    c = rng.uniform(10, 100, (6,) + g.shape)
    psi = rng.uniform(-0.05, 0.05, g.shape)
    new, floored = step_species(g, c, phi, psi, 1e-3, SP.D_l, SP.D_s, SP.z, act, 0.0)
    assert floored == 0.0
    for i in (NA, CL):
        a0 = total_amount(g, c[i], act)
        assert total_amount(g, new[i], act) == pytest.approx(a0, rel=1e-12)
    np.testing.assert_allclose(new[:, ~act], c[:, ~act], rtol=1e-13)


def test_metal_ion_equilibrium_profile_is_steady():
    # c1 = dc h(phi) + c_l is the no-flux state of the metal ion at zero potential
    g, _, act = _uniform_liquid(30, 1, 1e-6)
    x = (np.arange(30) + 0.5)
    phi = (0.5 * (1 - np.tanh((x - 15) / 3)))[None, :]
    from corrosionpf.energetics import h_func
    dc = 139.2e3
    c = np.full((6,) + g.shape, 1.0)
    c[M] = dc * h_func(phi) + 5.1e3
    new, _ = step_species(g, c, phi, np.zeros(g.shape), 1.0, SP.D_l, SP.D_s, SP.z, act, dc,
                          species=[M])
    np.testing.assert_allclose(new[M], c[M], rtol=1e-10)


def test_operator_columns_sum_to_zero():
    rng = np.random.default_rng(0)
    g = Grid.uniform(6, 5, 1e-6)
    A, _, _ = species_operator(g, rng.uniform(0, 1, g.shape), rng.uniform(-0.1, 0.1, g.shape),
                               1e-9, 1e-13, 2.19, np.ones(g.shape, bool))
    np.testing.assert_allclose(np.asarray(A.sum(axis=0)).ravel(), 0.0, atol=1e-20)


def test_pointwise_flux_liquid_share():
    c = np.ones((6, 3))
    zero = np.zeros((6, 3))
    D = np.ones((6, 3))
    gp = np.ones(3)
    h = np.full(3, 0.4)
    J = species_fluxes(c, zero, D, SP.z, gp, dh_dx=np.zeros(3), dc_eq=2.0, h=h)
    J0 = species_fluxes(c - np.array([2.0 * 0.4, 0, 0, 0, 0, 0])[:, None], zero, D, SP.z, gp)
    np.testing.assert_allclose(J[M], J0[M])
    np.testing.assert_allclose(J[NA], J0[NA])


def test_reaction_rates_equilibrium():
    c1 = 10.0
    c3 = 1e-4
    c2 = RP.K1 * c1 / c3
    c4 = RP.K2 / c3
    R = reaction_rates(c1, c2, c3, c4, RP)
    for r in R:
        assert abs(r) < 1e-12


def test_react_reaches_equilibrium():
    c1, c2, c3, c4 = react(np.array([50.0]), np.array([1e-6]), np.array([1e-4]), np.array([1e-4]), 1e10, RP)
    assert c2 * c3 == pytest.approx(RP.K1 * c1, rel=1e-6)
    assert c3 * c4 == pytest.approx(RP.K2, rel=1e-6)
    pH, pOH = ph_poh(c3, c4)
    assert pH + pOH == pytest.approx(14.0, abs=1e-6)


pos = st.floats(1e-8, 1e3)


@given(pos, pos, pos, pos, st.floats(0.0, 1e4))
def test_react_positive_and_invariants(c1, c2, c3, c4, dt):
    n1, n2, n3, n4 = react(np.array([c1]), np.array([c2]), np.array([c3]), np.array([c4]), dt, RP)
    assert n1 > 0 and n2 > 0 and n3 > 0 and n4 > 0
    assert n1 + n2 == pytest.approx(c1 + c2, rel=1e-9)
    assert n3 - n2 - n4 == pytest.approx(c3 - c2 - c4, rel=1e-9, abs=1e-9 * max(c1, c2, c3, c4))


def test_react_zero_dt_is_identity():
    args = [np.array([1.0, 2.0]) for _ in range(4)]
    out = react(*args, np.zeros(2), RP)
    for a, b in zip(out, args):
        np.testing.assert_array_equal(a, b)


def test_step_species_rejects_bad_dt():
    g, phi, act = _uniform_liquid(3, 3, 1e-6)
    with pytest.raises(ValueError):
        step_species(g, np.ones((6, 3, 3)), phi, phi, 0.0, SP.D_l, SP.D_s, SP.z, act, 0.0)
