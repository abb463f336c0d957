"""Registry of the sixteen acceptance criteria.

Each check returns a :class:`Verdict` carrying the measured value, the
target, the tolerance and whether it passed.  Checks never raise on a
failed comparison; numerical exceptions are turned into failing verdicts
with the message recorded.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import exactrg, lattice, pertflow, profiles, saw
from .lattice import BoundaryCondition, LatticeSpec


@dataclass
class Verdict:
    cid: int
    title: str
    measured: object
    target: object
    tolerance: object
    passed: bool
    seconds: float = 0.0
    budget: float = math.inf
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return (
            f"[{mark}] criterion {self.cid:2d} {self.title}: measured={_fmt(self.measured)} "
            f"target={_fmt(self.target)} tol={_fmt(self.tolerance)} ({self.seconds:.1f}s / {self.budget:g}s)"
        )

    def as_dict(self) -> dict:
        return {
            "id": self.cid,
            "title": self.title,
            "measured": _jsonable(self.measured),
            "target": _jsonable(self.target),
            "tolerance": _jsonable(self.tolerance),
            "passed": bool(self.passed),
            "seconds": self.seconds,
            "budget": self.budget,
            "details": _jsonable(self.details),
        }


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


@dataclass(frozen=True)
class AcceptanceOptions:
    seed: int = 7
    quick: bool = False

    @property
    def samples(self) -> int:
        return 600 if self.quick else 1000


# ---------------------------------------------------------------------------
# profiles

def check_kurtosis_constant(opts: AcceptanceOptions) -> Verdict:
    measured = 1.0 / profiles.universal_ratio(1, 2, 0.0)
    target = 0.456947
    return Verdict(1, "1/R_1^(4)(0)", measured, target, 1e-5, abs(measured - target) <= 1e-5, budget=1)


def check_renormalised_coupling(opts: AcceptanceOptions) -> Verdict:
    measured = profiles.renorm_coupling(1, 0.0)
    target = 0.81156
    return Verdict(2, "lambda_1(0)", measured, target, 1e-4, abs(measured - target) <= 1e-4, budget=1)


def check_f0_closed_form(opts: AcceptanceOptions) -> Verdict:
    grid = np.linspace(-4.0, 6.0, 51)
    quad = np.array([profiles.profile_f(0, s) for s in grid])
    closed = profiles.f0_closed_form(grid)
    dev = float(np.max(np.abs(quad / closed - 1)))
    return Verdict(3, "f_0 erfc form vs quadrature", dev, 0.0, 1e-8, dev < 1e-8, budget=5)


def check_profile_recursion(opts: AcceptanceOptions) -> Verdict:
    grid = np.linspace(-5.0, 6.0, 50)
    ns = [-1, 0, 1, 2, 3, 4]
    pole = profiles.pole_location(-1)
    table = {}
    residual = 0.0
    for n in ns:
        pts = grid[grid > pole] if n < 0 else grid
        vals = np.array([profiles.profile_f(n, s) for s in pts])
        up = np.array([profiles.profile_f(n + 2, s) for s in pts])
        residual = max(residual, float(np.max(np.abs(vals * ((n + 2) * up + pts) - 1))))
        table[n] = dict(zip(pts.tolist(), vals.tolist()))
    decreasing_s = all(np.all(np.diff(list(table[n].values())) < 0) for n in ns)
    decreasing_n = True
    for lo, hi in zip(ns[:-1], ns[1:]):
        common = sorted(set(table[lo]) & set(table[hi]))
        decreasing_n &= all(table[hi][s] < table[lo][s] for s in common)
    passed = residual < 1e-8 and decreasing_s and decreasing_n
    return Verdict(
        4,
        "profile recursion and monotonicity",
        residual,
        0.0,
        1e-8,
        passed,
        budget=10,
        details={"monotone_in_s": decreasing_s, "monotone_in_n": decreasing_n, "pole_n_minus_1": pole},
    )


def check_asymptotics(opts: AcceptanceOptions) -> Verdict:
    worst = 0.0
    for k in (1, 2, 3):
        for s in (30.0, -30.0):
            ratio = profiles.integral_I(k, s) / profiles.integral_I_asymptotic(k, s)
            worst = max(worst, abs(ratio - 1))
    return Verdict(5, "I_k asymptotics at |s|=30", worst, 0.0, 0.02, worst <= 0.02, budget=5)


# ---------------------------------------------------------------------------
# lattice

def check_lattice_identities(opts: AcceptanceOptions) -> Verdict:
    spec = LatticeSpec(2, 4, 2)
    eye = np.eye(spec.volume)
    P = [lattice.block_projection(spec, j) for j in (1, 2)]
    errs = {
        "idempotent": max(float(np.abs(p @ p - p).max()) for p in P),
        "orthogonal": float(np.abs(P[0] @ P[1]).max()),
        "completeness": float(np.abs(P[0] + P[1] + lattice.block_average(spec, 2) - eye).max()),
    }
    diff = lattice.laplacian(spec, "free") - lattice.laplacian(spec, "periodic")
    errs["fbc_pbc_difference"] = float(
        np.abs(diff - spec.q * 2.0 ** (-2 * spec.N) * lattice.block_average(spec, spec.N)).max()
    )
    rng = np.random.default_rng(opts.seed)
    lower = -(2.0 ** (-2 * (spec.N - 1)))
    masses = rng.uniform(lower * 0.9, 2.0, size=20)
    res_err = 0.0
    chi_err = 0.0
    for a in masses:
        for bc in BoundaryCondition:
            if lattice.zero_mode_mass(spec, bc, a) <= 0:
                continue
            G = lattice.resolvent(spec, bc, a)
            res_err = max(res_err, float(np.abs((lattice.laplacian(spec, bc) + a * eye) @ G - eye).max()))
            chi = G.sum(axis=1)
            exact = 1.0 / lattice.zero_mode_mass(spec, bc, a)
            chi_err = max(chi_err, float(np.abs(chi / exact - 1).max()))
    errs["resolvent_identity"] = res_err
    errs["free_susceptibility"] = chi_err
    worst = max(errs.values())
    return Verdict(6, "lattice identities", worst, 0.0, 1e-10, worst <= 1e-10, budget=30, details=errs)


# ---------------------------------------------------------------------------
# perturbative flow

def check_flow_d4(opts: AcceptanceOptions) -> Verdict:
    params = pertflow.FlowParams(d=4, n=1, L=2, g0=0.01)
    J = 10_000
    g = pertflow.reference_coupling(params, 0.0, J)
    deviation = abs(params.B * J * g[J] - 1)
    bound = 5 * math.log(J) / J
    fd_err = derivative_fd_error(params, jmax=100)
    passed = deviation <= bound and fd_err <= 1e-4
    return Verdict(
        7,
        "d=4 coupling asymptotics and derivative block",
        [deviation, fd_err],
        [bound, 0.0],
        [bound, 1e-4],
        passed,
        budget=10,
        details={"|BJg_J-1|": deviation, "bound": bound, "derivative_fd_rel_error": fd_err},
    )


def derivative_fd_error(params: pertflow.FlowParams, jmax: int = 100, offset: float = 1e-3) -> float:
    """Largest relative gap between the derivative block and centred differences, j <= jmax.

    The flow starts slightly off the critical point, where forward iteration
    is well conditioned; the mass step shrinks with j as L^{-2j} so that the
    mass factor (1 + a L^{2j})^{-1} is differenced on its natural scale.
    """
    nu0 = pertflow.nu_c(params) * (1 + offset)
    base = pertflow.run_flow(params, nu0, 0.0, jmax, derivatives=True)
    h = 1e-6 * abs(nu0)
    up = pertflow.run_flow(params, nu0 + h, 0.0, jmax, derivatives=False).nu
    down = pertflow.run_flow(params, nu0 - h, 0.0, jmax, derivatives=False).nu
    fd_nu0 = (up - down) / (2 * h)
    worst = float(np.max(np.abs(fd_nu0[1:] / base.dnu_dnu0[1:] - 1)))
    for j in range(1, jmax + 1):
        step = 1e-4 * float(params.L) ** (-2 * j)
        plus = pertflow.run_flow(params, nu0, step, j, derivatives=False).nu[j]
        minus = pertflow.run_flow(params, nu0, -step, j, derivatives=False).nu[j]
        fd = (plus - minus) / (2 * step)
        worst = max(worst, abs(fd / base.dnu_da[j] - 1))
    return worst


def check_bleher_sinai(opts: AcceptanceOptions) -> Verdict:
    params = pertflow.FlowParams(d=4, n=1, L=2, g0=1e-3)
    res = pertflow.bleher_sinai_critical(params)
    ratio = res.nu_c / params.g0
    d, L, n = params.d, params.L, params.n
    target = -(n + 2) * (1 - L**-d) / (1 - L ** -(d - 2))
    masses = [0.0, 1e-3, 1e-2, 0.1, 0.5]
    values = [pertflow.bleher_sinai_critical(params, a=m).nu_c for m in masses]
    increasing = bool(np.all(np.diff(values) > 0))
    rel = abs(ratio / target - 1)
    return Verdict(
        8,
        "Bleher-Sinai nu_c(0)/g and monotonicity in a",
        ratio,
        target,
        "10%",
        rel <= 0.10 and increasing,
        budget=60,
        details={"relative_gap": rel, "iterations": res.iterations, "nu_c(a)": dict(zip(masses, values))},
    )


FLOW_D5 = pertflow.FlowParams(d=5, n=1, L=2, g0=0.05)


def check_fbc_shift(opts: AcceptanceOptions) -> Verdict:
    params = FLOW_D5
    N = 20
    A = pertflow.amplitude(params)
    shift = -pertflow.effective_shift(params, "free", N)
    ratio = shift / (params.q * A * 2.0 ** (-2 * N))
    return Verdict(
        9,
        "d=5 FBC effective-point shift / (q A_d L^-2N)",
        ratio,
        1.0,
        "[0.85, 1.15]",
        0.85 <= ratio <= 1.15,
        budget=60,
        details={"A_d": A, "shift": shift},
    )


def check_renormalised_mass(opts: AcceptanceOptions) -> Verdict:
    cases = [(4, pertflow.FlowParams(d=4, n=1, L=2, g0=0.05)), (5, FLOW_D5)]
    N = 10
    s_grid = np.linspace(-5, 5, 21)
    worst = 0.0
    monotone = True
    for d, params in cases:
        scales = pertflow.scale_set(N, params)
        for bc in BoundaryCondition:
            sols = [pertflow.renormalized_mass_solve(s, N, bc, params, "w", scales) for s in s_grid]
            worst = max(worst, max(sol.residual / sol.scale for sol in sols))
            monotone &= bool(np.all(np.diff([sol.a for sol in sols]) > 0))
    passed = worst < 1e-12 and monotone
    return Verdict(
        10,
        "renormalised-mass residual and monotonicity",
        worst,
        0.0,
        1e-12,
        passed,
        budget=30,
        details={"monotone": monotone},
    )


def check_massive_regime(opts: AcceptanceOptions) -> Verdict:
    params = FLOW_D5
    A = pertflow.amplitude(params)
    eps = [2.0**-k for k in range(6, 13)]
    products = [e * pertflow.massive_susceptibility(e, params) for e in eps]
    final = products[-1]
    rel = abs(final / A - 1)
    return Verdict(
        16,
        "d=5 eps chi -> A_d",
        final,
        A,
        "5%",
        rel <= 0.05,
        budget=60,
        details={"eps_chi": dict(zip(range(6, 13), products)), "relative_gap": rel},
    )


# ---------------------------------------------------------------------------
# walks

def check_saw(opts: AcceptanceOptions) -> Verdict:
    ratios = {s: saw.saw_window_ratio(10**5, s) for s in (-2.0, 0.0, 2.0)}
    at_zero = [saw.saw_window_ratio(10**k, 0.0) for k in (3, 4, 5)]
    improving = bool(np.all(np.diff(np.abs(np.array(at_zero) - 1)) < 0))
    inside = all(0.97 <= r <= 1.03 for r in ratios.values())
    return Verdict(
        11,
        "complete-graph SAW window ratio",
        list(ratios.values()),
        1.0,
        "[0.97, 1.03]",
        inside and improving,
        budget=10,
        details={"s=0 ratios N=1e3,1e4,1e5": at_zero, "improving": improving},
    )


def check_wsaw(opts: AcceptanceOptions) -> Verdict:
    consts = saw.wsaw_window_constants(1.0)
    ratios = {s: saw.wsaw_window_ratio(10**5, s, 1.0, constants=consts)["ratio"] for s in (-1.0, 0.0, 1.0)}
    inside = all(0.93 <= r <= 1.07 for r in ratios.values())
    nu_ok = -1.3 < consts.nu_c < -1.1
    return Verdict(
        12,
        "WSAW nu_c(1) and window ratio",
        [consts.nu_c, *ratios.values()],
        [-1.2, 1.0],
        ["(-1.3, -1.1)", "[0.93, 1.07]"],
        inside and nu_ok,
        budget=120,
        details={"lambda1": consts.lambda1, "lambda2": consts.lambda2},
    )


# ---------------------------------------------------------------------------
# exact RG

def check_gaussian_pipeline(opts: AcceptanceOptions) -> Verdict:
    spec = LatticeSpec(2, 4, 3)
    mc = exactrg.MCConfig(samples=opts.samples, seed=opts.seed)
    nu, a = 0.3, 0.05
    traj = exactrg.run_pipeline(0.0, nu, 1, spec, a, mc)
    errs = {}
    for bc in BoundaryCondition:
        obs = exactrg.zero_mode_observables(traj[-1], bc, a, spec)
        exact = lattice.free_susceptibility(spec, bc, a + nu)
        errs[bc.value] = abs(obs.susceptibility / exact - 1)
    worst = max(errs.values())
    return Verdict(13, "exact RG Gaussian susceptibilities", worst, 0.0, 0.01, worst <= 0.01, budget=120, details=errs)


def check_rg_oracle(opts: AcceptanceOptions) -> Verdict:
    spec = LatticeSpec(2, 4, 1)
    g, nu = 0.1, -0.2
    samples = 4000
    mc = exactrg.MCConfig(samples=samples, seed=opts.seed)
    grid = np.linspace(0.0, 1.5, 40)
    sigma0 = math.sqrt(exactrg.FluctuationSpec.for_step(spec, 0, 0.0).sigma2)
    radius = exactrg.quartic_cover(g, nu, 4 * exactrg.COVERAGE) + 8 * sigma0
    W0 = exactrg.init_potential(g, nu, 1, exactrg.radial_grid(radius))
    W1 = exactrg.rg_step(W0, 0.0, spec, mc, grid=grid)
    direct, direct_se = exactrg.direct_mc_check(spec, g, nu, 0.0, grid, samples, opts.seed + 1)
    z = (W1.W + W1.log_offset - direct) / np.sqrt(W1.stderr**2 + direct_se**2)
    frac = float(np.mean(np.abs(z) <= 2))
    return Verdict(
        14,
        "one rg_step vs direct sampling (N=1)",
        frac,
        0.95,
        ">= 0.95 within 2 sigma",
        frac >= 0.95,
        budget=300,
        details={"max_abs_z": float(np.abs(z).max())},
    )


def window_physics(opts: AcceptanceOptions, fresh_seed: bool = True) -> dict:
    """Tuned effective points, gap and collapse deviations at (d=5, L=2, n=1, g=0.1)."""
    g, n = 0.1, 1
    mc = exactrg.MCConfig(samples=opts.samples, seed=opts.seed)
    out = {"collapse": {}, "nu": {}, "kurtosis": {}, "R6": {}}
    for N in (3, 4):
        spec = LatticeSpec(2, 5, N)
        for bc in BoundaryCondition:
            est = exactrg.locate_effective_critical(spec, bc, g, n, mc, bracket=(-0.3, -0.2))
            key = (N, bc.value)
            out["nu"][key] = est.nu
            out["kurtosis"][key] = est.observables.kurtosis()
            m = est.observables.moments
            out["R6"][key] = m[3] / m[1] ** 3
            if bc is BoundaryCondition.PERIODIC:
                a = exactrg.massless_mass(spec, bc)
                h = exactrg.second_moment_scale(est.potential, spec, bc, a)
                out["collapse"][N] = exactrg.collapse_deviation(est.potential, h)
    spec = LatticeSpec(2, 5, 4)
    nu_p = out["nu"][(4, "periodic")]
    if fresh_seed:
        fresh = exactrg.MCConfig(samples=opts.samples, seed=opts.seed + 1000)
        out["kurtosis_fresh_seed"] = exactrg.tuned_kurtosis(g, nu_p, n, spec, "periodic", fresh)
    out["gap"] = nu_p - out["nu"][(4, "free")]
    out["gap_scale"] = spec.q * 2.0 ** (-2 * spec.N)
    return out


def check_window_physics(opts: AcceptanceOptions) -> Verdict:
    data = window_physics(opts)
    target = exactrg.kurtosis_target(1)
    kurt = data["kurtosis"][(4, "periodic")]
    kurt_rel = abs(kurt / target - 1)
    gap_ratio = data["gap"] / data["gap_scale"]
    collapse = data["collapse"]
    parts = {
        "a_kurtosis": kurt_rel <= 0.10,
        "b_gap": 0.5 <= gap_ratio <= 2.0,
        "c_collapse": collapse[4] < collapse[3],
    }
    return Verdict(
        15,
        "exact RG window physics (d=5, N=4)",
        {"kurtosis": kurt, "gap_ratio": gap_ratio, "collapse_N3": collapse[3], "collapse_N4": collapse[4]},
        {"kurtosis": target, "gap_ratio": 1.0, "collapse": "N4 < N3"},
        {"kurtosis": "10%", "gap_ratio": "factor 2"},
        all(parts.values()),
        budget=900,
        details={
            **parts,
            "nu": {f"N={k[0]},{k[1]}": v for k, v in data["nu"].items()},
            "kurtosis": {f"N={k[0]},{k[1]}": v for k, v in data["kurtosis"].items()},
            "R6": {f"N={k[0]},{k[1]}": v for k, v in data["R6"].items()},
            "R6_target": profiles.universal_ratio_at_zero(1, 3),
            "kurtosis_fresh_seed": data.get("kurtosis_fresh_seed"),
        },
    )


# ---------------------------------------------------------------------------
# registry

CHECKS: dict[int, Callable[[AcceptanceOptions], Verdict]] = {
    1: check_kurtosis_constant,
    2: check_renormalised_coupling,
    3: check_f0_closed_form,
    4: check_profile_recursion,
    5: check_asymptotics,
    6: check_lattice_identities,
    7: check_flow_d4,
    8: check_bleher_sinai,
    9: check_fbc_shift,
    10: check_renormalised_mass,
    11: check_saw,
    12: check_wsaw,
    13: check_gaussian_pipeline,
    14: check_rg_oracle,
    15: check_window_physics,
    16: check_massive_regime,
}

TITLES = {
    1: "1/R_1^(4)(0)",
    2: "lambda_1(0)",
    3: "f_0 erfc form vs quadrature",
    4: "profile recursion and monotonicity",
    5: "I_k asymptotics at |s|=30",
    6: "lattice identities",
    7: "d=4 coupling asymptotics and derivative block",
    8: "Bleher-Sinai nu_c(0)/g and monotonicity in a",
    9: "d=5 FBC effective-point shift",
    10: "renormalised-mass residual and monotonicity",
    11: "complete-graph SAW window ratio",
    12: "WSAW nu_c(1) and window ratio",
    13: "exact RG Gaussian susceptibilities",
    14: "one rg_step vs direct sampling (N=1)",
    15: "exact RG window physics (d=5, N=4)",
    16: "d=5 eps chi -> A_d",
}

SUITES = {
    "profiles": [1, 2, 3, 4, 5],
    "lattice": [6],
    "pertflow": [7, 8, 9, 10, 16],
    "saw": [11, 12],
    "exactrg": [13, 14, 15],
}
SUITES["all"] = sorted(i for ids in SUITES.values() for i in ids)


def run_check(cid: int, opts: AcceptanceOptions | None = None) -> Verdict:
    opts = AcceptanceOptions() if opts is None else opts
    start = time.perf_counter()
    try:
        verdict = CHECKS[cid](opts)
    except Exception as exc:  # a crash is a failed criterion, not a crashed suite
        verdict = Verdict(cid, TITLES[cid], None, None, None, False, details={"error": f"{type(exc).__name__}: {exc}"})
    verdict.seconds = time.perf_counter() - start
    return verdict


def run_suite(name: str, opts: AcceptanceOptions | None = None) -> list[Verdict]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return [run_check(cid, opts) for cid in SUITES[name]]
