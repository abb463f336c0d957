"""Universal finite-size-scaling profiles of the quartic single-mode measure.

Everything is built on the one-dimensional integrals

    I_k(s) = int_0^inf x^k exp(-x^4/4 - s x^2/2) dx ,

evaluated by adaptive Gauss-Legendre quadrature.  Ratios are formed in
log space so that large negative ``s`` (where I_k ~ exp(s^2/4)) does not
overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, NumericalFailure
from .quadrature import DEFAULT_QUAD, QuadratureConfig, integrate


@dataclass(frozen=True)
class ProfileParams:
    n: float
    s: float

    def __post_init__(self):
        if not self.n > -2:
            raise DomainError(f"component number must exceed -2, got {self.n}")


def _tail_radius(log_f, dlog_f, start: float, log_tol: float) -> float:
    """Smallest doubling of ``start`` past which the integrand tail is below exp(log_tol).

    Uses the bound int_R^inf e^{phi} <= e^{phi(R)} / |phi'(R)| for phi concave
    and decreasing beyond ``start``.
    """
    r = max(start, 1.0)
    for _ in range(200):
        slope = dlog_f(r)
        if slope < 0 and log_f(r) - math.log(-slope) < log_tol:
            return r
        r *= 1.25
    raise NumericalFailure("could not place the tail cutoff")


def _quartic_shift(s: float) -> float:
    """Minimum of x^4/4 + s x^2/2 over x >= 0 (negated), used as a log scale."""
    return s * s / 4.0 if s < 0 else 0.0


def log_integral_I(k: float, s: float, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """log I_k(s) by quadrature."""
    if not k > -1:
        raise DomainError(f"I_k needs k > -1, got {k}")
    shift = _quartic_shift(s)

    def log_f(x):
        return k * math.log(x) - x**4 / 4 - s * x * x / 2 - shift

    def dlog_f(x):
        return k / x - x**3 - s * x

    points = [0.0]
    if s < 0:
        points.append(math.sqrt(-s))
    if k > 0:
        points.append(math.sqrt((-s + math.sqrt(s * s + 4 * k)) / 2))
    log_tol = math.log(cfg.abs_tol / 10)
    radius = _tail_radius(log_f, dlog_f, max(points) * 1.5 + 1.0, log_tol)
    points.append(radius)

    if k >= 0:
        def integrand(x):
            return x**k * np.exp(-(x**4) / 4 - s * x * x / 2 - shift)

        value, _ = integrate(integrand, points, cfg)
    else:
        # u = x^(k+1) removes the integrable singularity at the origin
        power = k + 1.0

        def integrand(u):
            x = u ** (1.0 / power)
            return np.exp(-(x**4) / 4 - s * x * x / 2 - shift) / power

        value, _ = integrate(integrand, [p**power for p in points], cfg)
    if not value > 0:
        raise NumericalFailure(f"nonpositive quadrature value for I_{k}({s})")
    return math.log(value) + shift


def integral_I(k: float, s: float, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    return math.exp(log_integral_I(k, s, cfg))


def integral_I_at_zero(k: float) -> float:
    """Closed form I_k(0) = 2^((k-3)/2) Gamma((k+1)/4)."""
    return 2.0 ** ((k - 3) / 2) * special.gamma((k + 1) / 4)


def integral_I_asymptotic(k: float, s: float) -> float:
    """Leading behaviour of I_k(s) for |s| large (sign of s selects the branch)."""
    if s > 0:
        return 2.0 ** ((k - 1) / 2) * special.gamma((k + 1) / 2) * s ** (-(k + 1) / 2)
    return math.sqrt(math.pi) * abs(s) ** ((k - 1) / 2) * math.exp(s * s / 4)


def faxen(alpha: float, beta: float, y: float, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Faxen integral Fi(alpha, beta; y) = int_0^inf exp(-t + y t^alpha) t^(beta-1) dt."""
    if not (0 <= alpha < 1):
        raise DomainError("Faxen integral needs 0 <= alpha < 1")
    if not beta > 0:
        raise DomainError("Faxen integral needs beta > 0")
    peak = (alpha * y) ** (1 / (1 - alpha)) if (y > 0 and alpha > 0) else 0.0
    shift = -peak + y * peak**alpha if peak > 0 else 0.0

    def log_f(t):
        return -t + y * t**alpha + (beta - 1) * math.log(t) - shift

    def dlog_f(t):
        return -1 + alpha * y * t ** (alpha - 1) + (beta - 1) / t

    points = [0.0, peak] if peak > 0 else [0.0]
    radius = _tail_radius(log_f, dlog_f, 2 * max(points) + 2 * beta + 1.0, math.log(cfg.abs_tol / 10))
    points.append(radius)
    if beta >= 1:
        def integrand(t):
            return t ** (beta - 1) * np.exp(-t + y * t**alpha - shift)

        value, _ = integrate(integrand, points, cfg)
    else:
        def integrand(u):
            t = u ** (1 / beta)
            return np.exp(-t + y * t**alpha - shift) / beta

        value, _ = integrate(integrand, [p**beta for p in points], cfg)
    return value * math.exp(shift)


def sigma_moment(n: float, k: float, s: float, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Sigma_{n,k}(s) = I_{k+n-1}(s) / I_{n-1}(s), the k-th radial moment of the n-component measure."""
    if not n > 0:
        raise DomainError(f"Sigma_(n,k) needs n > 0, got {n}")
    if not k > -n:
        raise DomainError(f"Sigma_(n,k) needs k > -n, got k={k}, n={n}")
    if k == 0:
        return 1.0
    return math.exp(log_integral_I(k + n - 1, s, cfg) - log_integral_I(n - 1, s, cfg))


def sigma_moment_asymptotic(n: float, k: float, s: float) -> float:
    if s > 0:
        return math.exp(special.gammaln((n + k) / 2) - special.gammaln(n / 2)) * (2 / s) ** (k / 2)
    return abs(s) ** (k / 2)


def f0_closed_form(s: float | np.ndarray) -> float | np.ndarray:
    """f_0(s) = I_1(s) = (sqrt(pi)/2) exp(s^2/4) erfc(s/2), via the scaled erfc."""
    return 0.5 * math.sqrt(math.pi) * special.erfcx(np.asarray(s, dtype=float) / 2)


def profile_f_at_zero(n: float) -> float:
    return special.gamma((n + 2) / 4) / (2 * special.gamma((n + 4) / 4))


def _profile_positive(n: float, s: float, cfg: QuadratureConfig) -> float:
    if n == 0:
        return integral_I(1, s, cfg)
    return math.exp(log_integral_I(n + 1, s, cfg) - log_integral_I(n - 1, s, cfg)) / n


def _pole_denominator(n: float, s: float, cfg: QuadratureConfig) -> float:
    return (n + 2) * _profile_positive(n + 2, s, cfg) + s


def pole_location(n: float, cfg: QuadratureConfig = DEFAULT_QUAD, floor: float = -60.0) -> float:
    """s_n^*, the largest zero of (n+2) f_{n+2}(s) + s, or -inf if there is none above ``floor``.

    Only meaningful for n in [-2, 0); returns -inf for n >= 0.
    """
    if n >= 0:
        return -math.inf
    if n == -2:
        return 0.0
    hi = 0.0
    # the denominator is positive at s = 0; march down until it changes sign
    step = 0.5
    lo = hi - step
    while _pole_denominator(n, lo, cfg) > 0:
        hi = lo
        step *= 1.5
        lo = hi - step
        if lo < floor:
            return -math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _pole_denominator(n, mid, cfg) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-12 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def profile_f(n: float, s: float, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Universal profile f_n(s) for real n > -2 (n = -2 allowed for s > 0).

    For n >= 0 this is I_{n+1}/(n I_{n-1}) (and I_1 at n = 0); for negative
    n it is continued through f_n = 1/((n+2) f_{n+2} + s).
    """
    if n < -2:
        raise DomainError(f"profile needs n >= -2, got {n}")
    if n >= 0:
        return _profile_positive(n, s, cfg)
    denom = _pole_denominator(n, s, cfg)
    if not denom > 0:
        raise DomainError(
            f"s={s} is at or below the pole of f_{n}; s_n* ~ {pole_location(n, cfg):.12g}"
        )
    return 1.0 / denom


def gaussian_moment(n: float, order: int, s: float) -> float:
    """M_{n,2p}(s): 2p-th radial moment of the n-component Gaussian with variance 1/s."""
    if order % 2 or order < 0:
        raise DomainError("Gaussian moment order must be a nonnegative even integer")
    if not s > 0 or not n > 0:
        raise DomainError("Gaussian moment needs s > 0 and n > 0")
    p = order // 2
    return (2 / s) ** p * math.exp(special.gammaln((n + order) / 2) - special.gammaln(n / 2))


def universal_ratio(n: float, p: int, s: float, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """R_n^(2p)(s) = Sigma_{n,2p}(s) / Sigma_{n,2}(s)^p."""
    if p < 1:
        raise DomainError("ratio order p must be >= 1")
    log_norm = log_integral_I(n - 1, s, cfg)
    log_2p = log_integral_I(n - 1 + 2 * p, s, cfg) - log_norm
    log_2 = log_integral_I(n + 1, s, cfg) - log_norm
    return math.exp(log_2p - p * log_2)


def universal_ratio_at_zero(n: float, p: int) -> float:
    g = special.gammaln
    return math.exp(g((n + 2 * p) / 4) + (p - 1) * g(n / 4) - p * g((n + 2) / 4))


def binder(n: float, s: float, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Binder cumulant U_n(s) = 1 - R_n^(4)(s)/3."""
    return 1.0 - universal_ratio(n, 2, s, cfg) / 3.0


def renorm_coupling(n: float, s: float, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Renormalised coupling lambda_n(s) = (n+2)/n - R_n^(4)(s).

    (n+2)/n is the Gaussian kurtosis, so lambda vanishes for a Gaussian and
    tends to 2/n deep in the ordered side.
    """
    return (n + 2) / n - universal_ratio(n, 2, s, cfg)


PROFILE_COLUMNS = ("n", "s", "f_n", "sigma_2", "sigma_4", "R4", "U", "lambda")


def profile_row(n: float, s: float, cfg: QuadratureConfig = DEFAULT_QUAD) -> dict[str, float]:
    """One row of the profile table used by the command-line interface."""
    f = profile_f(n, s, cfg)
    if n > 0:
        sig2 = sigma_moment(n, 2, s, cfg)
        sig4 = sigma_moment(n, 4, s, cfg)
        r4 = sig4 / sig2**2
        u = 1 - r4 / 3
        lam = (n + 2) / n - r4
    else:
        sig2 = sig4 = r4 = u = lam = math.nan
    return dict(zip(PROFILE_COLUMNS, (n, s, f, sig2, sig4, r4, u, lam)))
