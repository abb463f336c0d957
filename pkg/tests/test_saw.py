import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from hierfss import saw
from hierfss.errors import DomainError, NumericalFailure


def _enumerate_walks(N: int, z: float) -> float:
    """Sum of z^length over self-avoiding walks from vertex 0 of the complete graph K_N."""
    total = 0.0
    others = range(1, N)
    for length in range(N):
        total += z**length * sum(1 for _ in itertools.permutations(others, length))
    return total


@pytest.mark.parametrize("N, z", [(1, 0.7), (3, 1.0), (4, 0.5), (6, 0.25)])
def test_chi_matches_enumeration(N, z):
    assert saw.saw_chi_exact(N, z) == pytest.approx(_enumerate_walks(N, z), rel=1e-14)


# falling-factorial sums evaluated in 30-digit arithmetic
@pytest.mark.parametrize(
    "N, z, ref",
    [(5, 0.3, 4.1224), (10, 0.1, 3.66021568), (20, 0.05, 5.2935845860009009)],
)
def test_chi_high_precision_values(N, z, ref):
    assert saw.saw_chi_exact(N, z) == pytest.approx(ref, rel=1e-13)


def test_chi_three_sites_at_unit_fugacity():
    assert saw.saw_chi_exact(3, 1.0) == 5.0


def test_chi_log_space_branch_is_continuous():
    N = 200
    z = 4.0 / N
    below = saw.saw_chi_exact(N, z * (1 - 1e-12))
    above = saw.saw_chi_exact(N, z * (1 + 1e-12))
    assert above == pytest.approx(below, rel=1e-9)


def test_window_ratio_approaches_one():
    ratios = [saw.saw_window_ratio(N, 0.0) for N in (10**3, 10**4, 10**5)]
    assert all(abs(b - 1) < abs(a - 1) for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] == pytest.approx(1.0, abs=0.002)


@pytest.mark.parametrize("order", [0, 1])
def test_scaled_bessel_against_scipy(order):
    x = np.concatenate([np.linspace(0, 25, 301), np.geomspace(25, 1e6, 50)])
    assert np.allclose(saw.bessel_i_scaled(order, x), special.ive(order, x), rtol=2e-15, atol=0)


@pytest.mark.parametrize("order", [0, 1])
def test_scaled_bessel_branches_meet(order):
    x = np.array([saw.BESSEL_SWITCH])
    series = saw._bessel_series_scaled(order, x)
    asymptotic = saw._bessel_asymptotic_scaled(order, x)
    assert series[0] == pytest.approx(asymptotic[0], rel=1e-14)


def test_bessel_domain():
    with pytest.raises(DomainError):
        saw.bessel_i_scaled(2, 1.0)
    with pytest.raises(DomainError):
        saw.bessel_i_scaled(0, -1.0)


def test_wsaw_critical_point():
    # 30-digit root of int_0^inf exp(-s^2 - (nu+1) s) ds = 1
    assert saw.wsaw_critical_nu(1.0) == pytest.approx(-1.2069771956558053, abs=1e-12)


def test_local_time_moments_closed_form():
    g, nu = 0.7, -1.1
    m0, m1 = saw.local_time_moments(g, nu)
    # v'(0) = m0 from the quadrature route
    assert saw._v_integrals(0.0, saw.WSAWParams(g, nu), saw.WSAW_QUAD)[1] == pytest.approx(m0, rel=1e-12)
    # integration by parts identity 2 g m1 + b m0 = 1
    assert 2 * g * m1 + (nu + 1) * m0 == pytest.approx(1.0, rel=1e-14)


def test_window_constants_match_moment_identities():
    c = saw.wsaw_window_constants(1.0)
    _, m1 = saw.local_time_moments(1.0, c.nu_c)
    assert c.curvature == pytest.approx(1 - m1, rel=1e-7)
    assert c.mixed == pytest.approx(m1, rel=1e-8)


def test_effective_potential_small_t():
    params = saw.WSAWParams(1.0, saw.wsaw_critical_nu(1.0))
    V, dV = saw.wsaw_effective_potential(0.0, params)
    assert V == 0.0
    assert dV == pytest.approx(0.0, abs=1e-12)
    V1, _ = saw.wsaw_effective_potential(1e-3, params)
    assert V1 > 0


@pytest.mark.slow
def test_wsaw_window_ratio_near_one():
    c = saw.wsaw_window_constants(1.0)
    res = saw.wsaw_window_ratio(10**5, 0.0, 1.0, constants=c)
    assert res["ratio"] == pytest.approx(1.0, abs=0.01)
    assert res["lambda1"] == pytest.approx(1 / math.sqrt(c.curvature / 2))


def test_overflow_reported():
    with pytest.raises(NumericalFailure):
        saw.saw_chi_exact(1000, 1.0)


def test_domain_errors():
    with pytest.raises(DomainError):
        saw.saw_chi_exact(0, 1.0)
    with pytest.raises(DomainError):
        saw.saw_window_ratio(5, 0.0)
    with pytest.raises(DomainError):
        saw.WSAWParams(g=0.0)
    with pytest.raises(DomainError):
        saw.wsaw_window_ratio(100, 0.0)


@settings(max_examples=60, deadline=None)
@given(N=st.integers(min_value=1, max_value=300), z=st.floats(min_value=0.0, max_value=0.1))
def test_chi_increasing_in_fugacity_and_bounded_below(N, z):
    chi = saw.saw_chi_exact(N, z)
    assert chi >= 1.0
    assert saw.saw_chi_exact(N, z + 0.01) >= chi


@settings(max_examples=40, deadline=None)
@given(N=st.integers(min_value=2, max_value=200), z=st.floats(min_value=1e-3, max_value=0.3))
def test_chi_recursion_in_volume(N, z):
    # removing the start vertex: chi_N = 1 + z (N-1) chi_{N-1}
    assert saw.saw_chi_exact(N, z) == pytest.approx(1 + z * (N - 1) * saw.saw_chi_exact(N - 1, z), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(min_value=0.0, max_value=1e4))
def test_scaled_bessel_wronskian_bound(x):
    # 0 < I_1 < I_0 for x > 0
    i0 = saw.bessel_i_scaled(0, x)
    i1 = saw.bessel_i_scaled(1, x)
    assert 0 <= i1 < i0
