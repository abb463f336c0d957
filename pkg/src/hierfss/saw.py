"""Self-avoiding walk on the complete graph and the weakly self-avoiding
walk through its one-variable effective potential.

Both susceptibilities are compared with the n = 0 profile
f_0(s) = (sqrt(pi)/2) exp(s^2/4) erfc(s/2) inside their critical windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, NumericalFailure
from .profiles import f0_closed_form
from .quadrature import QuadratureConfig, integrate

BESSEL_SWITCH = 20.0
MAX_LOG = math.log(np.finfo(float).max)


# ---------------------------------------------------------------------------
# complete graph

def saw_chi_exact(N: int, z: float) -> float:
    """chi_N(z) = sum_{n=0}^{N-1} z^n (N-1)(N-2)...(N-n)."""
    if N < 1:
        raise DomainError("N must be >= 1")
    if N == 1:
        return 1.0
    factors = z * (N - 1 - np.arange(N - 1, dtype=float))
    if z * N <= 4:
        terms = np.cumprod(factors)
        return float(1.0 + terms.sum())
    # large z*N: the terms overflow, sum in log space
    with np.errstate(divide="ignore"):
        logs = np.concatenate([[0.0], np.cumsum(np.log(factors))])
    log_chi = float(special.logsumexp(logs))
    if log_chi > MAX_LOG:
        raise NumericalFailure(f"chi_N(z) = exp({log_chi:.1f}) overflows double precision")
    return math.exp(log_chi)


def saw_window_ratio(N: int, s: float) -> float:
    """chi_N(N^{-1}(1 - s (2N)^{-1/2})) / ((2N)^{1/2} f_0(s))."""
    if N < 10:
        raise DomainError("window ratio needs N >= 10")
    z = (1 - s / math.sqrt(2 * N)) / N
    return saw_chi_exact(N, z) / (math.sqrt(2 * N) * float(f0_closed_form(s)))


# ---------------------------------------------------------------------------
# modified Bessel functions, exponentially scaled

def _bessel_series_scaled(order: int, x: np.ndarray) -> np.ndarray:
    """exp(-x) I_order(x) from the power series; accurate for moderate x."""
    half = x / 2
    term = half**order / math.factorial(order)
    total = term.copy()
    sq = half * half
    for k in range(1, 200):
        term = term * sq / (k * (k + order))
        total = total + term
        if np.all(term <= 1e-17 * total):
            break
    return total * np.exp(-x)


def _bessel_asymptotic_scaled(order: int, x: np.ndarray) -> np.ndarray:
    """exp(-x) I_order(x) from the large-argument expansion, truncated at its smallest term."""
    mu = 4.0 * order * order
    term = np.ones_like(x)
    total = term.copy()
    prev = np.full_like(x, np.inf)
    for k in range(1, 60):
        term = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(term)
        grow = mag > prev
        if np.all(grow | (mag <= 1e-17 * np.abs(total))):
            break
        total = np.where(grow, total, total + term)
        prev = np.where(grow, prev, mag)
    return total / np.sqrt(2 * np.pi * x)


def bessel_i_scaled(order: int, x) -> np.ndarray:
    """exp(-x) I_order(x) for x >= 0 and order in {0, 1}."""
    x = np.asarray(x, dtype=float)
    if order not in (0, 1):
        raise DomainError("only orders 0 and 1 are needed")
    if np.any(x < 0):
        raise DomainError("argument must be nonnegative")
    out = np.empty_like(x)
    small = x < BESSEL_SWITCH
    if np.any(small):
        out[small] = _bessel_series_scaled(order, x[small])
    if np.any(~small):
        out[~small] = _bessel_asymptotic_scaled(order, x[~small])
    return out


# ---------------------------------------------------------------------------
# weakly self-avoiding walk

@dataclass(frozen=True)
class WSAWParams:
    g: float = 1.0
    nu: float = -1.2

    def __post_init__(self):
        if not self.g > 0:
            raise DomainError("g must be positive")


WSAW_QUAD = QuadratureConfig(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=2000)


def _local_time_range(g: float, b: float, t: float) -> tuple[float, float]:
    """Peak location and a cutoff for exp(-g s^2 - b s + 2 sqrt(s t))."""
    # stationary point of -g s^2 - b s + 2 sqrt(t s); solve by a few Newton steps
    s = max(-b / (2 * g), 0.0) + 1e-3

    def logw(x):
        return -g * x * x - b * x + 2 * math.sqrt(max(x, 0.0) * t)

    for _ in range(60):
        d1 = -2 * g * s - b + (math.sqrt(t / s) if t > 0 else 0.0)
        d2 = -2 * g - (0.5 * math.sqrt(t) * s**-1.5 if t > 0 else 0.0)
        step = d1 / d2
        s_new = s - step
        s = s_new if s_new > 0 else s / 2
        if abs(step) < 1e-12 * max(1.0, s):
            break
    peak = max(s, 0.0)
    top = logw(peak)
    cut = peak + 1.0
    while logw(cut) > top - 45:
        cut *= 1.5
    return peak, cut


def _v_integrals(t: float, params: WSAWParams, cfg: QuadratureConfig) -> tuple[float, float]:
    """(v(t), v'(t)) with v(t) = int e^{-g s^2 - (nu+1) s} sqrt(t/s) I_1(2 sqrt(st)) ds."""
    g, b = params.g, params.nu + 1.0
    if t == 0:
        dv, _ = integrate(lambda s: np.exp(-g * s * s - b * s), _local_points(g, b, 0.0), cfg)
        return 0.0, dv
    pts = _local_points(g, b, t)

    def kernel_v(s):
        x = 2 * np.sqrt(s * t)
        return np.exp(-g * s * s - b * s + x) * np.sqrt(t / s) * bessel_i_scaled(1, x)

    def kernel_dv(s):
        x = 2 * np.sqrt(s * t)
        return np.exp(-g * s * s - b * s + x) * bessel_i_scaled(0, x)

    v, _ = integrate(kernel_v, pts, cfg)
    dv, _ = integrate(kernel_dv, pts, cfg)
    return v, dv


def _local_points(g: float, b: float, t: float) -> list[float]:
    peak, cut = _local_time_range(g, b, t)
    pts = [0.0, cut]
    if 0 < peak < cut:
        pts.insert(1, peak)
    return pts


def wsaw_effective_potential(t: float, params: WSAWParams, cfg: QuadratureConfig = WSAW_QUAD) -> tuple[float, float]:
    """(V(t), V'(t)) with V(t) = t - log(1 + v(t))."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    v, dv = _v_integrals(t, params, cfg)
    if not 1 + v > 0:
        raise NumericalFailure(f"1 + v(t) <= 0 at t={t}")
    return t - math.log1p(v), 1 - dv / (1 + v)


def local_time_moments(g: float, nu: float) -> tuple[float, float]:
    """Closed forms of int_0^inf s^k exp(-g s^2 - (nu+1) s) ds for k = 0, 1."""
    b = nu + 1.0
    m0 = 0.5 * math.sqrt(math.pi / g) * float(special.erfcx(b / (2 * math.sqrt(g))))
    m1 = (1 - b * m0) / (2 * g)
    return m0, m1


def wsaw_critical_nu(g: float, cfg: QuadratureConfig = WSAW_QUAD, tol: float = 1e-13) -> float:
    """nu_c(g): bisection on V'(0) = 1 - int exp(-g s^2 - (nu+1) s) ds."""
    def slope(nu):
        return wsaw_effective_potential(0.0, WSAWParams(g, nu), cfg)[1]

    lo, hi = -1.0, -1.0
    step = 0.25
    for _ in range(200):
        if slope(lo) < 0:
            break
        lo -= step
        step *= 1.5
    else:
        raise NumericalFailure("no sign change below nu = -1")
    step = 0.25
    for _ in range(200):
        if slope(hi) > 0:
            break
        hi += step
        step *= 1.5
    else:
        raise NumericalFailure("no sign change above nu = -1")
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if slope(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class WindowConstants:
    nu_c: float
    curvature: float  # V''_c(0)
    mixed: float  # d/dnu V'_c(0)

    @property
    def lambda1(self) -> float:
        # Laplace's method for exp(-N P t^2) contributes Fi(1/2, 1/2; .) / (2 (PN)^(1/2))
        return 1 / math.sqrt(self.curvature / 2)

    @property
    def lambda2(self) -> float:
        return self.mixed / math.sqrt(self.curvature / 2)


def wsaw_window_constants(g: float, step: float = 1e-4, cfg: QuadratureConfig = WSAW_QUAD) -> WindowConstants:
    """V''_c(0) and d/dnu V'_c(0) by difference quotients of the quadrature V'.

    t >= 0 forces a one-sided quotient in t, (V'(h) - V'(0))/h, improved by
    one Richardson step; the nu-derivative is centred.
    """
    nu_c = wsaw_critical_nu(g, cfg)
    def vp(t, nu=nu_c):
        return wsaw_effective_potential(t, WSAWParams(g, nu), cfg)[1]

    base = vp(0.0)
    d_h = (vp(step) - base) / step
    d_h2 = (vp(step / 2) - base) / (step / 2)
    curvature = 2 * d_h2 - d_h

    def mixed_at(h):
        return (vp(0.0, nu_c + h) - vp(0.0, nu_c - h)) / (2 * h)

    mixed = (4 * mixed_at(step / 2) - mixed_at(step)) / 3
    if not curvature > 0:
        raise NumericalFailure("V''_c(0) is not positive")
    return WindowConstants(nu_c, curvature, mixed)


def wsaw_two_point(N: int, nu: float, g: float, cfg: QuadratureConfig = WSAW_QUAD) -> float:
    """G_01(nu) = int_0^inf exp(-N V(t)) (1 - V'(t))^2 dt."""
    params = WSAWParams(g, nu)

    def integrand(ts):
        out = np.empty_like(ts)
        for i, t in enumerate(ts):
            V, dV = wsaw_effective_potential(float(t), params, cfg)
            out[i] = math.exp(-N * V) * (1 - dV) ** 2
        return out

    # the mass sits on t = O(N^{-1/2}); extend until N V is large
    width = 1 / math.sqrt(N)
    upper = 10 * width
    while N * wsaw_effective_potential(upper, params, cfg)[0] < 60:
        upper *= 1.5
        if upper > 1e3:
            raise NumericalFailure("effective potential does not grow")
    pts = list(np.linspace(0.0, upper, 9))
    value, _ = integrate(integrand, pts, QuadratureConfig(abs_tol=1e-14, rel_tol=1e-9, max_subdivisions=500))
    return value


def wsaw_window_ratio(
    N: int, s: float, g: float = 1.0, cfg: QuadratureConfig = WSAW_QUAD, constants: WindowConstants | None = None
) -> dict:
    """N G_01(nu_c + s N^{-1/2}) / (lambda_1 sqrt(N) f_0(lambda_2 s)), with its components."""
    if N < 1000:
        raise DomainError("WSAW window ratio needs N >= 1000")
    c = wsaw_window_constants(g, cfg=cfg) if constants is None else constants
    g01 = wsaw_two_point(N, c.nu_c + s / math.sqrt(N), g, cfg)
    predicted = c.lambda1 * math.sqrt(N) * float(f0_closed_form(c.lambda2 * s))
    return {
        "N": N,
        "s": s,
        "ratio": N * g01 / predicted,
        "G01": g01,
        "nu_c": c.nu_c,
        "lambda1": c.lambda1,
        "lambda2": c.lambda2,
    }
