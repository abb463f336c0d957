import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierfss import pertflow
from hierfss.errors import DomainError
from hierfss.pertflow import FlowParams

D4 = FlowParams(d=4, n=1, L=2, g0=0.01)
D5 = FlowParams(d=5, n=1, L=2, g0=0.05)

# critical nu_0 from a 120-digit mpmath bisection on the sign of L^{2J} nu_J
MPMATH_NU_C = {
    (5, 0.05): -0.18410331759379734,
    (4, 0.01): -0.037846006372201501,
}


def _mpmath_escape_sign(nu0, d, g0, J, n=1, L=2):
    g, nu = mpmath.mpf(g0), mpmath.mpf(nu0)
    base = 1 - mpmath.mpf(L) ** (-d)
    gamma_hat = mpmath.mpf(n + 2) / (n + 8)
    for j in range(J):
        beta = (n + 8) * base * mpmath.mpf(L) ** (-(d - 4) * j)
        eta = (n + 2) * base * mpmath.mpf(L) ** (-(d - 2) * j)
        g, nu = g - beta * g * g, (1 - gamma_hat * beta * g) * nu + eta * g
    return 1 if nu > 0 else -1


@pytest.mark.parametrize("key", sorted(MPMATH_NU_C))
def test_critical_point_matches_high_precision(key):
    d, g0 = key
    params = FlowParams(d=d, n=1, L=2, g0=g0)
    assert pertflow.nu_c(params) == pytest.approx(MPMATH_NU_C[key], abs=1e-14)
    assert pertflow.bleher_sinai_critical(params, 0.0).nu_c == pytest.approx(MPMATH_NU_C[key], abs=1e-13)


def test_mpmath_oracle_brackets_frozen_value():
    with mpmath.workdps(80):
        nu = MPMATH_NU_C[(5, 0.05)]
        assert _mpmath_escape_sign(nu - 1e-13, 5, 0.05, 80) == -1
        assert _mpmath_escape_sign(nu + 1e-13, 5, 0.05, 80) == 1


def test_coupling_recursion_by_hand():
    g = pertflow.reference_coupling(D5, 0.0, 3)
    beta0 = 9 * (1 - 2.0**-5)
    assert g[1] == pytest.approx(0.05 - beta0 * 0.05**2, rel=1e-15)
    beta1 = beta0 * 2.0**-1
    assert g[2] == pytest.approx(g[1] - beta1 * g[1] ** 2, rel=1e-15)


def test_d4_coupling_decays_like_inverse_scale():
    J = 10_000
    g = pertflow.reference_coupling(D4, 0.0, J)
    assert abs(D4.B * J * g[J] - 1) <= 5 * math.log(J) / J


def test_d5_coupling_converges():
    limit = pertflow.coupling_limit(D5)
    g = pertflow.reference_coupling(D5, 0.0, 60)
    assert g[60] == pytest.approx(limit, rel=1e-12)
    assert 0 < limit < D5.g0


def test_inadmissible_coupling_rejected():
    with pytest.raises(DomainError):
        pertflow.check_admissible(FlowParams(d=5, n=1, L=2, g0=0.1))


def test_derivative_block_matches_finite_differences():
    params = D5
    nu0 = pertflow.nu_c(params) * (1 + 1e-3)
    trace = pertflow.run_flow(params, nu0, 0.0, 40)
    h = 1e-6 * abs(nu0)
    up = pertflow.run_flow(params, nu0 + h, 0.0, 40, derivatives=False)
    down = pertflow.run_flow(params, nu0 - h, 0.0, 40, derivatives=False)
    fd = (up.nu - down.nu) / (2 * h)
    assert np.allclose(trace.dnu_dnu0, fd, rtol=1e-6)


def test_mass_derivative_matches_finite_differences():
    params, a, jmax = D5, 0.05, 30
    nu0 = pertflow.nu_c(params, a)
    trace = pertflow.run_flow(params, nu0, a, jmax)
    h = 1e-6
    up = pertflow.run_flow(params, nu0, a + h, jmax, derivatives=False)
    down = pertflow.run_flow(params, nu0, a - h, jmax, derivatives=False)
    fd = (up.nu - down.nu) / (2 * h)
    scale = np.maximum(np.abs(fd), 1e-12)
    assert np.max(np.abs(trace.dnu_da - fd) / scale) < 1e-5


def test_critical_point_routes_agree_at_mass():
    a = 0.05
    shift = pertflow.nu_c_shift(D5, a)
    assert shift == pytest.approx(pertflow.nu_c_shift_forward(D5, a), rel=1e-9)
    assert pertflow.nu_c(D5) + shift == pytest.approx(pertflow.bleher_sinai_critical(D5, a).nu_c, abs=1e-12)


def test_finite_volume_shift_routes_agree():
    N = 8
    a = -D5.q * 2.0 ** (-2 * N)
    assert pertflow.nu_0N_shift(D5, a, N) == pytest.approx(pertflow.nu_0N_shift_backward(D5, a, N), rel=1e-8)


def test_amplitude_two_routes():
    from_difference = pertflow.amplitude(D5)
    from_derivatives = 1 + pertflow.critical_slope(D5)
    assert from_difference == pytest.approx(from_derivatives, rel=1e-3)


def test_free_effective_point_shift():
    N = 20
    shift = -pertflow.effective_shift(D5, "free", N)
    ratio = shift / (D5.q * pertflow.amplitude(D5) * 2.0 ** (-2 * N))
    assert 0.85 <= ratio <= 1.15
    assert pertflow.effective_shift(D5, "periodic", N) == 0.0


@pytest.mark.parametrize("bc", ["free", "periodic"])
def test_renormalised_mass_residual(bc):
    sol = pertflow.renormalized_mass_solve(0.5, 10, bc, D5)
    assert sol.residual <= 1e-12 * sol.scale


def test_massive_susceptibility_tends_to_amplitude():
    eps = 1e-7
    assert eps * pertflow.massive_susceptibility(eps, D5) == pytest.approx(pertflow.amplitude(D5), rel=0.05)


def test_flow_params_validation():
    with pytest.raises(DomainError):
        FlowParams(d=3)
    with pytest.raises(DomainError):
        FlowParams(g0=0.0)
    with pytest.raises(DomainError):
        pertflow.critical_slope(D4)


@settings(max_examples=15, deadline=None)
@given(masses=st.lists(st.floats(min_value=1e-3, max_value=0.5), min_size=2, max_size=4, unique=True))
def test_critical_point_increases_with_mass(masses):
    masses = sorted(masses)
    values = [pertflow.nu_c_shift(D5, a) for a in masses]
    assert all(b > a for a, b in zip(values, values[1:]))


@settings(max_examples=20, deadline=None)
@given(s=st.floats(min_value=-2.0, max_value=2.0), gap=st.floats(min_value=0.05, max_value=1.0))
def test_renormalised_mass_increases_with_s(s, gap):
    lo = pertflow.renormalized_mass(s, 8, "periodic", D5)
    hi = pertflow.renormalized_mass(s + gap, 8, "periodic", D5)
    assert hi > lo
