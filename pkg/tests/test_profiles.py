import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from hierfss import profiles
from hierfss.errors import DomainError

# f_n(s) and R_n^(4)(s) from 30-digit mpmath quadrature of the defining integrals
MPMATH_TABLE = [
    (1, 0.0, 0.67597824006728473, 2.1884396152264766),
    (1, -3.0, 2.5853048782076764, 1.3100201852529916),
    (1, 2.5, 0.30250795531900974, 2.6633950434948328),
    (2, 0.0, 0.56418958354775629, 1.5707963267948966),
    (2, -1.0, 0.78897818137263137, 1.4369612660176990),
    (3, 1.0, 0.37903927839307354, 1.4407029392678256),
    (4, -2.0, 0.72469170967641790, 1.1659775704045137),
]


@pytest.mark.parametrize("n, s, f_ref, r4_ref", MPMATH_TABLE)
def test_profile_and_kurtosis_match_high_precision(n, s, f_ref, r4_ref):
    assert profiles.profile_f(n, s) == pytest.approx(f_ref, rel=1e-10)
    assert profiles.universal_ratio(n, 2, s) == pytest.approx(r4_ref, rel=1e-10)


def test_integrals_far_from_zero():
    assert profiles.integral_I(1, -10.0) == pytest.approx(127625361114.51552, rel=1e-10)
    assert profiles.integral_I(3, 30.0) == pytest.approx(0.0022075695058704951, rel=1e-10)


@pytest.mark.parametrize("k", [0, 1, 2, 3, 5])
def test_integral_at_zero_gamma_form(k):
    # int x^k exp(-x^4/4) dx = 4^((k-3)/4) Gamma((k+1)/4)
    assert profiles.integral_I(k, 0.0) == pytest.approx(4 ** ((k - 3) / 4) * special.gamma((k + 1) / 4), rel=1e-12)
    assert profiles.integral_I_at_zero(k) == pytest.approx(profiles.integral_I(k, 0.0), rel=1e-12)


@pytest.mark.parametrize("s", [-6.0, -1.0, 0.0, 0.7, 4.0])
def test_integral_against_scipy_quad(s):
    ref, _ = integrate.quad(lambda x: x**2 * math.exp(-(x**4) / 4 - s * x * x / 2), 0, np.inf, epsabs=0, epsrel=1e-13)
    assert profiles.integral_I(2, s) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 6])
def test_profile_at_zero_closed_form(n):
    assert profiles.profile_f(n, 0.0) == pytest.approx(profiles.profile_f_at_zero(n), rel=1e-11)


def test_f0_closed_form_and_large_s_tail():
    s = np.array([-4.0, 0.0, 3.0, 40.0])
    ref = 0.5 * math.sqrt(math.pi) * np.exp(s * s / 4) * special.erfc(s / 2)
    assert np.allclose(profiles.f0_closed_form(s), ref, rtol=1e-13)
    # f_0(s) ~ 1/s for s -> infinity
    assert profiles.f0_closed_form(1e4) * 1e4 == pytest.approx(1.0, rel=1e-7)


def test_kurtosis_constant_at_zero():
    assert 1 / profiles.universal_ratio(1, 2, 0.0) == pytest.approx(0.456947, abs=1e-6)
    assert profiles.universal_ratio_at_zero(1, 2) == pytest.approx(profiles.universal_ratio(1, 2, 0.0), rel=1e-12)


def test_renormalised_coupling_limits():
    assert profiles.renorm_coupling(1, 0.0) == pytest.approx(0.81156, abs=1e-5)
    assert abs(profiles.renorm_coupling(1, 60.0)) < 0.01
    assert profiles.renorm_coupling(2, -60.0) == pytest.approx(2 / 2, abs=0.01)


def test_gaussian_moment_is_large_s_limit():
    for order in (2, 4):
        ratio = profiles.sigma_moment(3, order, 400.0) / profiles.gaussian_moment(3, order, 400.0)
        assert ratio == pytest.approx(1.0, rel=0.02)


def test_binder_cumulant_bounds():
    values = [profiles.binder(1, s) for s in (-8.0, 0.0, 8.0)]
    assert values[0] > values[1] > values[2] > 0
    assert values[0] < 2 / 3


def test_negative_n_pole():
    pole = profiles.pole_location(-1)
    assert pole == pytest.approx(-1.0818039, abs=1e-6)
    assert profiles.profile_f(-1, pole + 1e-3) > 100
    with pytest.raises(DomainError):
        profiles.profile_f(-1, pole - 0.01)


def test_domain_errors():
    with pytest.raises(DomainError):
        profiles.ProfileParams(n=-2.5, s=0.0)
    with pytest.raises(DomainError):
        profiles.integral_I(-1.5, 0.0)
    with pytest.raises(DomainError):
        profiles.universal_ratio(1, 0, 0.0)


def test_profile_row_columns():
    row = profiles.profile_row(1, 0.0)
    assert tuple(row) == profiles.PROFILE_COLUMNS
    assert row["lambda"] == pytest.approx(profiles.renorm_coupling(1, 0.0), rel=1e-12)
    assert row["U"] == pytest.approx(profiles.binder(1, 0.0), rel=1e-12)


s_values = st.floats(min_value=-8.0, max_value=8.0, allow_nan=False)
n_values = st.integers(min_value=0, max_value=6)


@settings(max_examples=40, deadline=None)
@given(n=n_values, s=s_values)
def test_recursion_identity(n, s):
    # f_n ((n+2) f_{n+2} + s) = 1
    lhs = profiles.profile_f(n, s) * ((n + 2) * profiles.profile_f(n + 2, s) + s)
    assert lhs == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(n=n_values, s=s_values, gap=st.floats(min_value=0.05, max_value=3.0))
def test_profile_decreasing_in_s(n, s, gap):
    assert profiles.profile_f(n, s + gap) < profiles.profile_f(n, s)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(min_value=1, max_value=5), s=s_values)
def test_kurtosis_between_ordered_and_gaussian(n, s):
    # Jensen gives R >= 1; the quartic measure is less spread than the Gaussian
    r4 = profiles.universal_ratio(n, 2, s)
    assert 1.0 <= r4 <= (n + 2) / n


@settings(max_examples=30, deadline=None)
@given(s=s_values)
def test_f0_closed_form_matches_quadrature(s):
    assert profiles.profile_f(0, s) == pytest.approx(float(profiles.f0_closed_form(s)), rel=1e-10)
