"""Second-order hierarchical RG flow of (g_j, nu_j) and everything derived from it.

The map is

    g_{j+1}  = g_j - beta_j g_j^2
    nu_{j+1} = (1 - gh beta_j g_j) nu_j + eta_j g_j - xi_j g_j^2,   gh = (n+2)/(n+8)

with mass-dependent coefficients beta_j, eta_j, xi_j.  Non-perturbative
remainders are not modelled, so nu_j is affine in nu_0 and the g-flow does
not depend on nu_0 at all.

Three numerically distinct routes to the critical point are provided:

* ``bleher_sinai_critical`` bisects nu_0 on the side from which the forward
  flow escapes the shrinking bands J_j (the nested-interval construction);
* ``critical_trajectory`` shoots backwards from nu_H = 0 at a far horizon,
  which is stable because the forward instability becomes a contraction;
* the offset flows (``nu_c_shift``, ``nu_0N_shift``) follow the difference
  between a massive trajectory and the massless critical one, with all
  coefficient differences formed analytically.  Mass shifts of order
  L^(-2N) stay resolvable even when they are far below the rounding error
  of nu_c itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .errors import DomainError, NumericalFailure
from .lattice import BoundaryCondition, greens_diagonal
from .profiles import DEFAULT_QUAD, QuadratureConfig, sigma_moment

BAND_CONSTANT = 6.0


@dataclass(frozen=True)
class FlowParams:
    d: int = 4
    n: int = 1
    L: int = 2
    g0: float = 0.01
    a: float = 0.0
    tilde_a: float = 0.0
    xi0: float = 0.0
    jmax: Optional[int] = None

    def __post_init__(self):
        if self.d < 4:
            raise DomainError("the flow is implemented for d >= 4")
        if self.L < 2 or self.n < 1:
            raise DomainError("need L >= 2 and n >= 1")
        if not self.g0 > 0:
            raise DomainError("g0 must be positive")
        if self.tilde_a < 0:
            raise DomainError("reference mass must be nonnegative")

    @property
    def horizon(self) -> int:
        if self.jmax is not None:
            return int(self.jmax)
        return 100_000 if self.d == 4 else 400

    @property
    def B(self) -> float:
        return (self.n + 8) * (1 - float(self.L) ** (-self.d))

    @property
    def gamma_hat(self) -> float:
        return (self.n + 2) / (self.n + 8)

    @property
    def theta_hat(self) -> float:
        return 0.5 - self.gamma_hat

    @property
    def q(self) -> float:
        return (1 - float(self.L) ** (-self.d)) / (1 - float(self.L) ** (-(self.d + 2)))

    def with_(self, **changes) -> "FlowParams":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# coefficients

def _mass_factor(j: int, a: float, L: int) -> tuple[float, float]:
    """Return (w, u) with w = 1/(1 + a L^{2j}) and u = L^{2j} w, both overflow-safe."""
    if a == 0:
        return 1.0, float(L) ** (2 * j) if j < 500 else math.inf
    if a > 0:
        inv = float(L) ** (-2 * j)
        denom = inv + a
        return inv / denom, 1.0 / denom
    scale = float(L) ** (2 * j)
    w = 1.0 + a * scale
    if not w > 0:
        raise DomainError(f"mass {a} violates 1 + a L^(2j) > 0 at scale {j}")
    return 1.0 / w, scale / w


def coefficients(j: int, a: float, params: FlowParams) -> tuple[float, float, float]:
    """(beta_j, eta_j, xi_j) at squared mass a."""
    d, L, n = params.d, params.L, params.n
    w, _ = _mass_factor(j, a, L)
    base = 1 - float(L) ** (-d)
    beta = (n + 8) * base * w * w * float(L) ** (-(d - 4) * j)
    eta = (n + 2) * base * w * float(L) ** (-(d - 2) * j)
    xi = params.xi0 * w**3 * float(L) ** (-(2 * d - 6) * j)
    return beta, eta, xi


def mass_scale(a: float, L: int) -> float:
    """j_a = max{j in Z : L^{2j} a <= 1}; +inf for a <= 0."""
    if a <= 0:
        return math.inf
    j = math.floor(-math.log(a) / (2 * math.log(L)))
    while float(L) ** (2 * (j + 1)) * a <= 1:
        j += 1
    while float(L) ** (2 * j) * a > 1:
        j -= 1
    return j


def vartheta(j: int, tilde_a: float, L: int) -> float:
    """Decay factor above the mass scale."""
    if tilde_a >= 1:
        return 2.0 ** (-j) / tilde_a
    ja = mass_scale(tilde_a, L)
    if ja == math.inf:
        return 1.0
    return 2.0 ** (-max(j - ja, 0))


def mass_interval(j: int, tilde_a: float, L: int) -> tuple[float, float]:
    """Admissible masses at scale j around the reference mass."""
    if tilde_a == 0:
        half = 0.5 * float(L) ** (-2 * j)
        return -half, half
    return 0.5 * tilde_a, 2 * tilde_a


@lru_cache(maxsize=64)
def reference_coupling(params: FlowParams, tilde_a: float, jmax: int) -> np.ndarray:
    """g~_j for j = 0..jmax: the coupling flow at the reference mass."""
    g = np.empty(jmax + 1)
    g[0] = params.g0
    for j in range(jmax):
        beta, _, _ = coefficients(j, tilde_a, params)
        g[j + 1] = g[j] - beta * g[j] * g[j]
    return g


def check_admissible(params: FlowParams, tilde_a: float = 0.0, jmax: int = 200) -> None:
    """Require g~_{j+1} in [g~_j / 2, g~_j]; otherwise the second-order map is not a controlled flow."""
    g = reference_coupling(params, tilde_a, jmax)
    bad = np.nonzero((g[1:] < 0.5 * g[:-1]) | (g[1:] > g[:-1]))[0]
    if len(bad):
        j = int(bad[0])
        raise DomainError(
            f"g0={params.g0} is too large: g~_{j + 1}/g~_{j} = {g[j + 1] / g[j]:.3g} leaves [1/2, 1]"
        )


def band_halfwidth(params: FlowParams, tilde_a: float, jmax: int) -> np.ndarray:
    """Half-width 6(n+2) theta_j g~_j rho_j L^{-2j} of the target bands J_j."""
    g = reference_coupling(params, tilde_a, jmax)
    L, d = params.L, params.d
    out = np.empty(jmax + 1)
    for j in range(jmax + 1):
        out[j] = (
            BAND_CONSTANT * (params.n + 2) * vartheta(j, tilde_a, L) * g[j]
            * float(L) ** (-(d - 4) * j) * float(L) ** (-2 * j)
        )
    return out


# ---------------------------------------------------------------------------
# single steps and forward trajectories

@dataclass
class CouplingState:
    j: int
    g: float
    nu: float
    dg_dnu0: Optional[float] = None
    dnu_dnu0: Optional[float] = None
    dg_da: Optional[float] = None
    dnu_da: Optional[float] = None

    @property
    def has_derivatives(self) -> bool:
        return self.dnu_dnu0 is not None


def pt_step(state: CouplingState, a: float, params: FlowParams) -> CouplingState:
    """Advance one scale; the derivative block is advanced when present."""
    j, g, nu = state.j, state.g, state.nu
    beta, eta, xi = coefficients(j, a, params)
    gh = params.gamma_hat
    contraction = 1 - gh * beta * g
    g_next = g - beta * g * g
    nu_next = contraction * nu + eta * g - xi * g * g
    if not state.has_derivatives:
        return CouplingState(j + 1, g_next, nu_next)
    _, u = _mass_factor(j, a, params.L)
    beta_dot = -2 * u * beta
    xi_dot = -3 * u * xi
    gp, nup, gd, nud = state.dg_dnu0, state.dnu_dnu0, state.dg_da, state.dnu_da
    gp_next = gp - 2 * beta * g * gp
    nup_next = contraction * nup - gh * beta * gp * nu + eta * gp - 2 * xi * g * gp
    gd_next = gd - beta_dot * g * g - 2 * beta * g * gd
    # the mass derivative of eta_j g_j equals -gh beta_j g_j + eta_j gdot_j
    nud_next = (
        contraction * nud
        - gh * beta * g
        + eta * gd
        - gh * (beta_dot * g + beta * gd) * nu
        - xi_dot * g * g
        - 2 * xi * g * gd
    )
    return CouplingState(j + 1, g_next, nu_next, gp_next, nup_next, gd_next, nud_next)


@dataclass
class FlowTrace:
    """A trajectory j = 0..len-1 with optional derivative columns."""

    a: float
    g: np.ndarray
    nu: np.ndarray
    dnu_dnu0: Optional[np.ndarray] = None
    dnu_da: Optional[np.ndarray] = None
    dg_da: Optional[np.ndarray] = None
    escaped_at: Optional[int] = None
    escape_side: int = 0

    def __len__(self) -> int:
        return len(self.g)

    def records(self, stride: int = 1) -> list[dict]:
        out = []
        for j in range(0, len(self.g), max(1, stride)):
            rec = {"j": j, "g": float(self.g[j]), "nu": float(self.nu[j])}
            rec["dnu_dnu0"] = None if self.dnu_dnu0 is None else float(self.dnu_dnu0[j])
            rec["dnu_da"] = None if self.dnu_da is None else float(self.dnu_da[j])
            out.append(rec)
        return out


def run_flow(
    params: FlowParams,
    nu0: float,
    a: Optional[float] = None,
    jmax: Optional[int] = None,
    derivatives: bool = True,
    band: Optional[np.ndarray] = None,
) -> FlowTrace:
    """Iterate the map from (g0, nu0) for ``jmax`` scales.

    If ``band`` is given the iteration stops at the first j with
    |nu_j| > band[j]; ``escaped_at`` and ``escape_side`` record where and on
    which side.
    """
    a = params.a if a is None else a
    jmax = params.horizon if jmax is None else jmax
    state = CouplingState(0, params.g0, nu0, *( (0.0, 1.0, 0.0, 0.0) if derivatives else (None,) * 4))
    gs, nus = [state.g], [state.nu]
    nups, nuds, gds = [], [], []
    if derivatives:
        nups.append(1.0)
        nuds.append(0.0)
        gds.append(0.0)
    escaped_at, side = None, 0
    for _ in range(jmax):
        state = pt_step(state, a, params)
        gs.append(state.g)
        nus.append(state.nu)
        if derivatives:
            nups.append(state.dnu_dnu0)
            nuds.append(state.dnu_da)
            gds.append(state.dg_da)
        if band is not None and abs(state.nu) > band[state.j]:
            escaped_at, side = state.j, (1 if state.nu > 0 else -1)
            break
    return FlowTrace(
        a=a,
        g=np.array(gs),
        nu=np.array(nus),
        dnu_dnu0=np.array(nups) if derivatives else None,
        dnu_da=np.array(nuds) if derivatives else None,
        dg_da=np.array(gds) if derivatives else None,
        escaped_at=escaped_at,
        escape_side=side,
    )


# ---------------------------------------------------------------------------
# critical point: nested-interval bisection and backward shooting

@dataclass
class CriticalResult:
    nu_c: float
    bracket: tuple[float, float]
    iterations: int
    trace: FlowTrace
    last_escape: Optional[int]


def bleher_sinai_critical(
    params: FlowParams,
    a: Optional[float] = None,
    jmax: Optional[int] = None,
    rel_tol: float = 1e-13,
    max_iter: int = 200,
) -> CriticalResult:
    """Locate nu_c(a) for a >= 0 by bisection on the escape side of the bands.

    A trial nu_0 is classified as too large (small) when its trajectory
    first leaves J_j above (below).  Because nu_j increases with nu_0 the
    set of non-escaping initial values is an interval, and bisection
    shrinks the bracket onto it.  Trajectories that survive to the horizon
    are classified by the sign of nu at the horizon.
    """
    a = params.a if a is None else a
    if a < 0:
        raise DomainError("infinite-volume critical point needs a >= 0")
    jmax = params.horizon if jmax is None else jmax
    tilde_a = a
    check_admissible(params, tilde_a, min(jmax, 200))
    band = band_halfwidth(params, tilde_a, jmax)
    lo, hi = -band[0], band[0]

    def side(nu0: float) -> tuple[int, FlowTrace]:
        tr = run_flow(params, nu0, a, jmax, derivatives=False, band=band)
        if tr.escaped_at is not None:
            return tr.escape_side, tr
        return (1 if tr.nu[-1] > 0 else -1), tr

    s_lo, tr_lo = side(lo)
    s_hi, tr_hi = side(hi)
    if s_lo > 0 or s_hi < 0:
        bad = tr_lo if s_lo > 0 else tr_hi
        raise NumericalFailure(
            f"band bracket failed (g0 too large?); first escape at scale {bad.escaped_at}"
        )
    it = 0
    last = None
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        s_mid, tr = side(mid)
        last = tr.escaped_at
        if s_mid > 0:
            hi = mid
        else:
            lo = mid
        it += 1
        if hi - lo <= rel_tol * abs(mid):
            break
    nu_c = 0.5 * (lo + hi)
    stable = critical_trajectory(params, a, jmax)
    J = min(jmax, 200)
    trace = derivative_block(params, FlowTrace(a=a, g=stable.g[: J + 1], nu=stable.nu[: J + 1]))
    return CriticalResult(nu_c, (lo, hi), it, trace, last)


@lru_cache(maxsize=64)
def critical_trajectory(params: FlowParams, a: float = 0.0, jmax: Optional[int] = None) -> FlowTrace:
    """Critical trajectory obtained by iterating the map backwards from nu_H = 0.

    nu_j = (nu_{j+1} - b_j) / (1 - gh beta_j g_j) with b_j = eta_j g_j - xi_j g_j^2.
    The forward g-flow and the forward derivative block are attached.
    """
    if a < 0:
        raise DomainError("infinite-volume critical trajectory needs a >= 0")
    H = params.horizon if jmax is None else jmax
    gh = params.gamma_hat
    g = np.empty(H + 1)
    g[0] = params.g0
    coef = np.empty((H, 3))
    for j in range(H):
        coef[j] = coefficients(j, a, params)
        g[j + 1] = g[j] - coef[j, 0] * g[j] ** 2
    nu = np.zeros(H + 1)
    for j in range(H - 1, -1, -1):
        beta, eta, xi = coef[j]
        nu[j] = (nu[j + 1] - eta * g[j] + xi * g[j] ** 2) / (1 - gh * beta * g[j])
    return FlowTrace(a=a, g=g, nu=nu)


def derivative_block(params: FlowParams, trace: FlowTrace) -> FlowTrace:
    """Attach nu', nudot and gdot computed along the stored (g_j, nu_j) columns.

    Using stored values rather than re-iterating nu_j keeps the block
    meaningful along a backward-shot critical trajectory, whose forward
    re-iteration would drift away at the rounding level.
    """
    a = trace.a
    J = len(trace.g) - 1
    gh = params.gamma_hat
    nup = np.empty(J + 1)
    nud = np.empty(J + 1)
    gd = np.empty(J + 1)
    nup[0], nud[0], gd[0] = 1.0, 0.0, 0.0
    for j in range(J):
        g, nu = float(trace.g[j]), float(trace.nu[j])
        beta, eta, xi = coefficients(j, a, params)
        _, u = _mass_factor(j, a, params.L)
        contraction = 1 - gh * beta * g
        beta_dot, xi_dot = -2 * u * beta, -3 * u * xi
        nup[j + 1] = contraction * nup[j]
        gd[j + 1] = gd[j] - beta_dot * g * g - 2 * beta * g * gd[j]
        nud[j + 1] = (
            contraction * nud[j]
            - gh * beta * g
            + eta * gd[j]
            - gh * (beta_dot * g + beta * gd[j]) * nu
            - xi_dot * g * g
            - 2 * xi * g * gd[j]
        )
    return replace(trace, dnu_dnu0=nup, dnu_da=nud, dg_da=gd)


def nu_c(params: FlowParams, a: float = 0.0) -> float:
    """nu_c(a) = nu_c(0) + (offset-flow shift); accurate even for tiny a."""
    base = float(critical_trajectory(params, 0.0).nu[0])
    return base if a == 0 else base + nu_c_shift(params, a)


def derivative_trace(params: FlowParams, a: float = 0.0, jmax: int = 200) -> FlowTrace:
    """Derivative block along the critical trajectory at mass a >= 0, scales 0..jmax."""
    stable = critical_trajectory(params, a)
    J = min(jmax, len(stable.g) - 1)
    return derivative_block(params, FlowTrace(a=a, g=stable.g[: J + 1], nu=stable.nu[: J + 1]))


# ---------------------------------------------------------------------------
# offset flows relative to the massless critical trajectory

def _expm1_power(x: float, k: int) -> float:
    """(1 + x)^(-k) - 1 without cancellation."""
    return math.expm1(-k * math.log1p(x))


@lru_cache(maxsize=256)
def _offset_tables(params: FlowParams, a: float, J: int) -> dict[str, np.ndarray]:
    """Coefficient and coupling differences between mass a and mass 0 for j < J."""
    ref = critical_trajectory(params, 0.0)
    if J > len(ref.g) - 1:
        raise DomainError(f"matching scale {J} beyond horizon {len(ref.g) - 1}")
    gh = params.gamma_hat
    L = params.L
    contraction = np.empty(J)
    dcontraction = np.empty(J)
    db = np.empty(J)
    dg = 0.0
    for j in range(J):
        g0 = float(ref.g[j])
        beta0, eta0, xi0 = coefficients(j, 0.0, params)
        if a > 0:
            x = a * float(L) ** (2 * j) if j < 1000 else math.inf
        else:
            x = a * float(L) ** (2 * j)
            if not 1 + x > 0:
                raise DomainError(f"mass {a} violates 1 + a L^(2j) > 0 at scale {j}")
        if math.isinf(x):
            f1 = f2 = f3 = -1.0
        else:
            f1, f2, f3 = _expm1_power(x, 1), _expm1_power(x, 2), _expm1_power(x, 3)
        ga = g0 + dg
        dbeta, deta, dxi = beta0 * f2, eta0 * f1, xi0 * f3
        beta_a = beta0 + dbeta
        d_betag = dbeta * ga + beta0 * dg
        contraction[j] = 1 - gh * beta_a * ga
        dcontraction[j] = -gh * d_betag
        db[j] = (deta * ga + eta0 * dg) - (dxi * ga * ga + xi0 * dg * (ga + g0))
        dg = dg - (dbeta * ga * ga + beta0 * dg * (ga + g0))
    return {"contraction": contraction, "dcontraction": dcontraction, "db": db, "nu_ref": ref.nu[:J + 1]}


def _forward_offset(params: FlowParams, a: float, J: int, delta: float) -> float:
    """nu_J(nu_c(0) + delta, a) - nu_J(nu_c(0), 0) by forward iteration."""
    t = _offset_tables(params, a, J)
    c, dc, db, ref = t["contraction"], t["dcontraction"], t["db"], t["nu_ref"]
    off = delta
    for j in range(J):
        off = c[j] * off + dc[j] * ref[j] + db[j]
    return off


def _backward_offset(params: FlowParams, a: float, J: int) -> float:
    """delta such that the mass-a trajectory from nu_c(0)+delta meets the reference at scale J."""
    t = _offset_tables(params, a, J)
    c, dc, db, ref = t["contraction"], t["dcontraction"], t["db"], t["nu_ref"]
    off = 0.0
    for j in range(J - 1, -1, -1):
        off = (off - dc[j] * ref[j] - db[j]) / c[j]
    return off


def _truncated_horizon(params: FlowParams, a: float) -> int:
    H = params.horizon
    ja = mass_scale(a, params.L)
    if ja == math.inf:
        return H
    return int(min(H, max(ja, 0) + 80))


def nu_c_shift(params: FlowParams, a: float) -> float:
    """nu_c(a) - nu_c(0) for a >= 0, by backward iteration of the offset flow."""
    if a < 0:
        raise DomainError("nu_c(a) is defined for a >= 0")
    if a == 0:
        return 0.0
    return _backward_offset(params, a, _truncated_horizon(params, a))


def nu_c_shift_forward(params: FlowParams, a: float) -> float:
    """Same quantity as ``nu_c_shift`` via a root of the forward offset flow."""
    J = _truncated_horizon(params, a)
    return _match_root(params, a, J)


def _match_root(params: FlowParams, a: float, J: int) -> float:
    f0 = _forward_offset(params, a, J, 0.0)
    if f0 == 0:
        return 0.0
    width = BAND_CONSTANT * (params.n + 2) * params.g0
    lo, hi = -width, width
    if _forward_offset(params, a, J, lo) > 0 or _forward_offset(params, a, J, hi) < 0:
        raise DomainError("matching root lies outside the initial Bleher-Sinai interval")
    scale = abs(f0)
    return optimize.brentq(
        lambda x: _forward_offset(params, a, J, x) / scale, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=300
    )


def _check_finite_mass(params: FlowParams, a: float, N: int) -> None:
    lo, hi = mass_interval(N - 1, 0.0, params.L)
    if not lo < a < hi:
        raise DomainError(f"mass {a} outside the finite-volume interval ({lo:.3e}, {hi:.3e})")


def nu_0N_shift(params: FlowParams, a: float, N: int) -> float:
    """nu_{0,N}(a) - nu_c(0): root of nu_N(nu_0, a) = nu_N(nu_c(0), 0)."""
    if N < 1:
        raise DomainError("N must be >= 1")
    _check_finite_mass(params, a, N)
    if a == 0:
        return 0.0
    return _match_root(params, a, N)


def nu_0N_shift_backward(params: FlowParams, a: float, N: int) -> float:
    _check_finite_mass(params, a, N)
    return _backward_offset(params, a, N)


def nu_0N(params: FlowParams, a: float, N: int) -> float:
    return nu_c(params) + nu_0N_shift(params, a, N)


def nu_1N_shift(params: FlowParams, a: float, N: int) -> float:
    """nu_{1,N}(a) - nu_c(0): the infinite-volume critical point for a >= 0, nu_{0,N} below."""
    if a >= 0:
        return nu_c_shift(params, a)
    return nu_0N_shift(params, a, N)


def effective_shift(params: FlowParams, bc: BoundaryCondition | str, N: int) -> float:
    """nu*_{c,N} - nu_c(0): zero for periodic, nu_{0,N}(-qL^{-2N}) - qL^{-2N} - nu_c(0) for free."""
    bc = BoundaryCondition.parse(bc)
    if bc is BoundaryCondition.PERIODIC:
        return 0.0
    m = params.q * float(params.L) ** (-2 * N)
    return nu_0N_shift(params, -m, N) - m


def effective_critical_point(params: FlowParams, bc: BoundaryCondition | str, N: int) -> float:
    return nu_c(params) + effective_shift(params, bc, N)


# ---------------------------------------------------------------------------
# amplitudes, scales, renormalised masses and predictions

def critical_slope(params: FlowParams, jmax: Optional[int] = None) -> float:
    """d nu_c / da at a = 0 from the derivative block, -lim nudot_j / nu'_j (d > 4)."""
    if params.d == 4:
        raise DomainError("the slope of nu_c diverges at a = 0 for d = 4")
    H = min(params.horizon, 200) if jmax is None else jmax
    tr = derivative_trace(params, 0.0, H)
    return float(-tr.dnu_da[-1] / tr.dnu_dnu0[-1])


def amplitude(params: FlowParams, step: float = 1e-4) -> float:
    """A_4 from its leading closed form; A_d (d > 4) as 1 + dnu_c/da at 0+.

    For d > 4 the derivative is a one-sided difference quotient of the
    offset critical point with one Richardson step, D = 2 D(h/2) - D(h).
    """
    if params.d == 4:
        return (params.B * params.g0 / math.log(params.L**2)) ** params.gamma_hat
    d1 = nu_c_shift(params, step) / step
    d2 = nu_c_shift(params, step / 2) / (step / 2)
    return 1.0 + 2 * d2 - d1


def coupling_limit(params: FlowParams) -> float:
    """g_infinity for d > 4 (the massless coupling at the horizon)."""
    if params.d == 4:
        raise DomainError("g_j -> 0 for d = 4")
    return float(reference_coupling(params, 0.0, params.horizon)[-1])


@dataclass(frozen=True)
class ScaleSet:
    N: int
    wN: float
    vN: float
    hN: float
    lN: float
    pN: float
    B: float
    g_inf_est: float
    A_d_est: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("N", "wN", "vN", "hN", "lN", "pN", "B", "g_inf_est", "A_d_est")}


def scale_set(
    N: int,
    params: FlowParams,
    nu_c_fn: Optional[Callable[[float], float]] = None,
    amplitude_est: Optional[float] = None,
) -> ScaleSet:
    """Window, FBC-shift and large-field scales at volume L^{dN}.

    ``nu_c_fn`` (a -> nu_c(a) - nu_c(0)) overrides the finite-difference
    source for A_d; ``amplitude_est`` bypasses it altogether.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    L, d, n = float(params.L), params.d, params.n
    B = params.B
    if amplitude_est is not None:
        A = amplitude_est
    elif d > 4 and nu_c_fn is not None:
        h = 1e-4
        A = 1 + 2 * nu_c_fn(h / 2) / (h / 2) - nu_c_fn(h) / h
    else:
        A = amplitude(params)
    pN = L ** (-N * d / 2)
    lN = L ** (-N * (d - 2) / 2)
    if d == 4:
        gh, th = params.gamma_hat, params.theta_hat
        log_l2 = math.log(L**2)
        wN = A * log_l2**gh * B ** (-0.5) * N ** (-th) * L ** (-2 * N)
        vN = A * log_l2**gh * N**gh * L ** (-2 * N)
        hN = (B * N) ** 0.25 * L ** (-N)
        g_inf = math.nan
    else:
        g_inf = coupling_limit(params)
        wN = A * math.sqrt(g_inf) * L ** (-N * d / 2)
        vN = A * L ** (-2 * N)
        hN = g_inf ** (-0.25) * L ** (-N * d / 4)
    return ScaleSet(N, wN, vN, hN, lN, pN, B, g_inf, A)


def _window_scale(scales: ScaleSet, window: str) -> float:
    if window == "w":
        return scales.wN
    if window == "v":
        return scales.vN
    raise DomainError(f"window must be 'w' or 'v', got {window!r}")


@dataclass(frozen=True)
class MassSolution:
    a: float
    residual: float
    scale: float
    target_offset: float


def renormalized_mass_solve(
    s: float,
    N: int,
    bc: BoundaryCondition | str,
    params: FlowParams,
    window: str = "w",
    scales: Optional[ScaleSet] = None,
) -> MassSolution:
    """Solve nu*_{c,N} + s y_N = nu_{1,N}(a) + a for a, in coordinates relative to nu_c(0)."""
    scales = scale_set(N, params) if scales is None else scales
    y = _window_scale(scales, window)
    target = effective_shift(params, bc, N) + s * y
    lower = -0.5 * float(params.L) ** (-2 * (N - 1))
    scale = max(abs(target), y, float(params.L) ** (-2 * N))

    def F(a):
        return nu_1N_shift(params, a, N) + a - target

    lo = lower * (1 - 1e-12)
    if F(lo) > 0:
        raise DomainError(f"s={s} lies below the solvable range for N={N}")
    hi = max(2 * abs(target), scale)
    while F(hi) < 0:
        hi *= 2
        if hi > 1e6:
            raise DomainError(f"s={s} lies above the solvable range for N={N}")
    root = optimize.brentq(lambda a: F(a) / scale, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=300)
    return MassSolution(root, abs(F(root)), scale, target)


def renormalized_mass(
    s: float, N: int, bc: BoundaryCondition | str, params: FlowParams, window: str = "w"
) -> float:
    return renormalized_mass_solve(s, N, bc, params, window).a


def window_susceptibility(s: float, N: int, params: FlowParams, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Leading-order susceptibility at nu*_{c,N} + s w_N."""
    n, L, d = params.n, float(params.L), params.d
    profile = sigma_moment(n, 2, s, cfg) / n
    if d == 4:
        return profile * math.sqrt(params.B * N) * L ** (2 * N)
    return profile * coupling_limit(params) ** (-0.5) * L ** (N * d / 2)


def massive_mass(eps: float, params: FlowParams) -> float:
    """m^2 solving nu_c(0) + eps = nu_c(m^2) + m^2."""
    if not eps > 0:
        raise DomainError("eps must be positive")

    def F(m2):
        return nu_c_shift(params, m2) + m2 - eps

    hi = eps
    while F(hi) < 0:
        hi *= 2
    return optimize.brentq(lambda m2: F(m2) / eps, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)


def massive_susceptibility(eps: float, params: FlowParams) -> float:
    return 1.0 / massive_mass(eps, params)


def predicted_susceptibility(
    s: float,
    N: int,
    bc: BoundaryCondition | str,
    params: FlowParams,
    cfg: QuadratureConfig = DEFAULT_QUAD,
) -> float:
    """Window prediction for the susceptibility at nu*_{c,N}(bc) + s w_N.

    The leading term is the same for both boundary conditions once the
    window is centred on the matching effective critical point.
    """
    BoundaryCondition.parse(bc)
    return window_susceptibility(s, N, params, cfg)
