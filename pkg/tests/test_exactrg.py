import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from hierfss import exactrg, lattice, profiles
from hierfss.errors import DomainError, NumericalFailure
from hierfss.lattice import BoundaryCondition, LatticeSpec


def _quartic_at_scale(spec: LatticeSpec, g: float, n: int = 1, points: int = 256) -> exactrg.RadialPotential:
    """Omega_N g r^4/4 placed at scale N, so the zero mode is exactly quartic."""
    omega = spec.volume
    radius = (4 * 40 / (omega * g)) ** 0.25
    grid = exactrg.radial_grid(radius, points)
    return exactrg.RadialPotential(spec.N, n, grid, omega * 0.25 * g * grid**4)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_zero_mode_of_pure_quartic_has_universal_ratios(n):
    spec = LatticeSpec(2, 2, 2)
    obs = exactrg.zero_mode_observables(_quartic_at_scale(spec, 0.7, n), "periodic", 0.0, spec, moments=(1, 2, 3))
    assert obs.kurtosis() == pytest.approx(profiles.universal_ratio_at_zero(n, 2), rel=1e-8)
    assert obs.moments[3] / obs.moments[1] ** 3 == pytest.approx(profiles.universal_ratio_at_zero(n, 3), rel=1e-8)


def test_laplace_transform_of_gaussian_zero_mode():
    # W = Omega c r^2/2, n = 1: E exp(J Phi) = exp(J^2 / (2 Omega c))
    spec = LatticeSpec(2, 2, 2)
    c = 0.8
    grid = exactrg.radial_grid(math.sqrt(2 * 60 / (spec.volume * c)))
    W = exactrg.RadialPotential(spec.N, 1, grid, 0.5 * spec.volume * c * grid**2)
    obs = exactrg.zero_mode_observables(W, "periodic", 0.0, spec, laplace=(0.5, 2.0))
    for J, value in obs.laplace.items():
        assert value == pytest.approx(math.exp(J * J / (2 * spec.volume * c)), rel=1e-9)
    assert obs.susceptibility == pytest.approx(1 / c, rel=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_sphere_average(n):
    x = np.array([0.0, 0.3, 4.0, 50.0])
    if n == 3:
        ref = np.where(x > 0, np.sinh(x) / np.where(x > 0, x, 1), 1.0) * np.exp(-x)
    else:
        order = n / 2 - 1
        safe = np.where(x > 0, x, 1.0)
        ref = np.where(x > 0, special.gamma(n / 2) * (2 / safe) ** order * special.iv(order, safe) * np.exp(-x), 1.0)
    assert np.allclose(exactrg._sphere_average_exp(n, x), ref, rtol=1e-12)


def test_gaussian_pipeline_is_exact():
    spec = LatticeSpec(2, 3, 2)
    nu, a = 0.4, 0.1
    traj = exactrg.run_pipeline(0.0, nu, 1, spec, a, exactrg.MCConfig(samples=200, seed=1))
    for bc in BoundaryCondition:
        obs = exactrg.zero_mode_observables(traj[-1], bc, a, spec)
        assert obs.susceptibility == pytest.approx(lattice.free_susceptibility(spec, bc, a + nu), rel=1e-8)


def test_one_step_agrees_with_direct_sampling():
    spec = LatticeSpec(2, 3, 1)
    g, nu = 0.1, -0.2
    mc = exactrg.MCConfig(samples=2000, seed=11)
    sigma0 = math.sqrt(exactrg.FluctuationSpec.for_step(spec, 0, 0.0).sigma2)
    radius = exactrg.quartic_cover(g, nu, 4 * exactrg.COVERAGE) + 8 * sigma0
    W0 = exactrg.init_potential(g, nu, 1, exactrg.radial_grid(radius))
    grid = np.linspace(0.0, 1.2, 13)
    W1 = exactrg.rg_step(W0, 0.0, spec, mc, grid=grid)
    direct, direct_se = exactrg.direct_mc_check(spec, g, nu, 0.0, grid, 2000, 12)
    z = (W1.W + W1.log_offset - direct) / np.sqrt(W1.stderr**2 + direct_se**2)
    assert np.mean(np.abs(z) <= 2.5) >= 0.9


def test_same_seed_is_bitwise_reproducible():
    spec = LatticeSpec(2, 3, 2)
    mc = exactrg.MCConfig(samples=200, seed=5)
    first = exactrg.run_pipeline(0.1, -0.2, 1, spec, 0.0, mc)[-1]
    second = exactrg.run_pipeline(0.1, -0.2, 1, spec, 0.0, mc)[-1]
    assert np.array_equal(first.W, second.W)
    assert first.log_offset == second.log_offset
    other = exactrg.run_pipeline(0.1, -0.2, 1, spec, 0.0, exactrg.MCConfig(samples=200, seed=6))[-1]
    assert not np.array_equal(first.W, other.W)
    assert first.seeds == [(5, 0), (5, 1)]


def test_checkpoint_round_trip(tmp_path):
    spec = LatticeSpec(2, 3, 1)
    W = exactrg.run_pipeline(0.1, -0.1, 2, spec, 0.0, exactrg.MCConfig(samples=100, seed=2), points=64)[-1]
    path = tmp_path / "w.csv"
    exactrg.write_checkpoint(W, path, extra={"note": "x"})
    back = exactrg.read_checkpoint(path)
    assert back.j == W.j and back.n == W.n
    assert np.array_equal(back.grid, W.grid)
    assert np.array_equal(back.W, W.W)
    assert np.array_equal(back.stderr, W.stderr)
    assert back.log_offset == W.log_offset
    assert back.seeds == W.seeds


def test_log_mean_exp_matches_direct_average():
    rng = np.random.default_rng(0)
    values = rng.normal(size=(400, 3))
    lme, se, ess = exactrg._log_mean_exp_stats(values, antithetic=False)
    assert np.allclose(lme, np.log(np.mean(np.exp(values), axis=0)))
    assert np.all(se > 0)
    assert np.all((ess > 0) & (ess <= 1))


def test_radial_potential_extrapolation_is_continuous():
    grid = exactrg.radial_grid(3.0, 64)
    W = exactrg.RadialPotential(0, 1, grid, exactrg.quartic(0.2, -0.3, grid))
    edge = grid[-1]
    assert W(np.array([edge * (1 + 1e-9)]))[0] == pytest.approx(W.W[-1], rel=1e-6)
    # the tail fit reproduces an exactly quartic potential
    assert W(np.array([2 * edge]))[0] == pytest.approx(exactrg.quartic(0.2, -0.3, 2 * edge), rel=1e-8)


def test_validation():
    with pytest.raises(DomainError):
        exactrg.RadialPotential(0, 1, np.linspace(0.1, 1, 10), np.zeros(10))
    with pytest.raises(NumericalFailure):
        exactrg.RadialPotential(0, 1, np.linspace(0, 1, 10), np.full(10, np.nan))
    with pytest.raises(DomainError):
        exactrg.MCConfig(samples=3)
    with pytest.raises(DomainError):
        exactrg.FluctuationSpec(1, 1.0)
    with pytest.raises(DomainError):
        exactrg.quartic_cover(0.0, -1.0, 10.0)
    spec = LatticeSpec(2, 2, 2)
    with pytest.raises(DomainError):
        wrong_scale = exactrg.RadialPotential(1, 1, np.linspace(0, 1, 10), np.zeros(10))
        exactrg.zero_mode_observables(wrong_scale, "periodic", 0.0, spec)


def test_massless_mass_flattens_zero_mode():
    spec = LatticeSpec(2, 5, 3)
    for bc in BoundaryCondition:
        assert lattice.zero_mode_mass(spec, bc, exactrg.massless_mass(spec, bc)) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(
    m=st.integers(min_value=2, max_value=40),
    n=st.integers(min_value=1, max_value=3),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_fluctuations_sum_to_zero(m, n, seed):
    draws = exactrg.FluctuationSpec(m, 0.7).sample(np.random.default_rng(seed), 16, n)
    assert draws.shape == (16, m, n)
    assert np.allclose(draws.sum(axis=1), 0.0, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(
    g=st.floats(min_value=0.01, max_value=2.0),
    nu=st.floats(min_value=-1.0, max_value=1.0),
    target=st.floats(min_value=1.0, max_value=200.0),
)
def test_quartic_cover_reaches_target(g, nu, target):
    radius = exactrg.quartic_cover(g, nu, target)
    low = -(nu**2) / (4 * g) if nu < 0 else 0.0
    assert exactrg.quartic(g, nu, np.array([radius]))[0] - low == pytest.approx(target, rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(c=st.floats(min_value=0.1, max_value=3.0))
def test_gaussian_step_scales_quadratic_coefficient(c):
    # with zero-sum fluctuations, c r^2/2 maps to m c r^2/2 exactly
    spec = LatticeSpec(2, 2, 1)
    grid = exactrg.radial_grid(math.sqrt(2 * 4 * exactrg.COVERAGE / c), 64)
    W0 = exactrg.RadialPotential(0, 1, grid, 0.5 * c * grid**2)
    W1 = exactrg.rg_step(W0, 0.0, spec, exactrg.MCConfig(samples=20, seed=0))
    assert np.allclose(W1.W, 0.5 * spec.block_size * c * W1.grid**2, rtol=1e-9, atol=1e-9)
