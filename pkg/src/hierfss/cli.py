"""Command-line driver.

Every subcommand builds a result record (config echo, outputs, provenance)
and writes it as JSON, or as CSV for tabular outputs.  Exit codes: 0 on
success, 2 for domain or configuration errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, acceptance, exactrg, lattice, pertflow, profiles, saw
from .errors import DomainError, NumericalFailure
from .quadrature import DEFAULT_QUAD, QuadratureConfig

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_NUMERICAL = 3

# defaults for every config field; None means "not set" (seed) or "derived"
DEFAULTS: dict[str, object] = {
    "d": 4,
    "n": 1,
    "L": 2,
    "N": 3,
    "g": 0.01,
    "nu": None,
    "s": "0",
    "a": 0.0,
    "z": None,
    "bc": "periodic",
    "seed": None,
    "samples": 1000,
    "tol": None,
    "points": exactrg.GRID_POINTS,
    "replicas": 4,
    "moments": "1,2",
    "input": None,
    "out": None,
    "format": "json",
    "threads": 1,
    "suite": "all",
    "quick": False,
    "stride": 1,
    "jmax": None,
}

INT_FIELDS = {"d", "n", "L", "N", "seed", "samples", "points", "replicas", "threads", "stride", "jmax"}
FLOAT_FIELDS = {"g", "nu", "a", "z", "tol"}
BOOL_FIELDS = {"quick"}

ACTIONS = {
    "profiles": (None,),
    "lattice": (None,),
    "flow": ("run",),
    "critical": ("find",),
    "window": ("predict",),
    "exactrg": ("run", "observe"),
    "saw": ("check",),
    "wsaw": ("check",),
    "accept": (None,),
}


class ConfigError(DomainError):
    """Malformed configuration file or flag value."""


# ---------------------------------------------------------------------------
# configuration

def read_config_file(path: str | Path, command: str | None = None) -> dict[str, str]:
    """Flat key=value pairs; ``[section]`` headers select a subcommand.

    Keys outside any section apply to every subcommand; keys inside a
    section apply only when it matches ``command``.
    """
    values: dict[str, str] = {}
    section = None
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if section is None or section == command:
            values[key] = value
    return values


def coerce(key: str, value) -> object:
    if value is None:
        return None
    try:
        if key in INT_FIELDS:
            return int(value)
        if key in FLOAT_FIELDS:
            return float(value)
        if key in BOOL_FIELDS:
            if isinstance(value, bool):
                return value
            lowered = str(value).lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return lowered in ("true", "1", "yes")
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return str(value)


def build_config(args: argparse.Namespace) -> dict[str, object]:
    """Defaults, then the config file, then explicit flags."""
    config = dict(DEFAULTS)
    if args.config:
        config.update(read_config_file(args.config, args.command))
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            config[key] = flag
    config = {key: coerce(key, value) for key, value in config.items()}
    config["command"] = args.command
    config["action"] = getattr(args, "action", None)
    if config["bc"] not in ("free", "periodic"):
        raise ConfigError(f"bc must be free or periodic, got {config['bc']!r}")
    if config["format"] not in ("json", "csv"):
        raise ConfigError(f"format must be json or csv, got {config['format']!r}")
    if config["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    return config


def float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def quad_config(config: dict) -> QuadratureConfig:
    if config["tol"] is None:
        return DEFAULT_QUAD
    return QuadratureConfig(abs_tol=DEFAULT_QUAD.abs_tol, rel_tol=config["tol"])


def flow_params(config: dict) -> pertflow.FlowParams:
    return pertflow.FlowParams(d=config["d"], n=config["n"], L=config["L"], g0=config["g"], jmax=config["jmax"])


def require_seed(config: dict) -> int:
    if config["seed"] is None:
        raise ConfigError(f"{config['command']} {config['action'] or ''} is stochastic and needs --seed".replace("  ", " "))
    return config["seed"]


# ---------------------------------------------------------------------------
# records

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def make_record(config: dict, outputs: dict, seeds: Sequence | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": _clean(config),
        "outputs": _clean(outputs),
        "provenance": {
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "seed_lineage": _clean(list(seeds) if seeds is not None else []),
        },
    }


def render_json(record: dict) -> str:
    return json.dumps(record, indent=2, sort_keys=True) + "\n"


def render_csv(rows: list[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_cell(row.get(col)) for col in columns])
    return buf.getvalue()


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def emit(text: str, config: dict) -> None:
    if config["out"] is None:
        sys.stdout.write(text)
        return
    try:
        Path(config["out"]).write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {config['out']}: {exc}") from None


# ---------------------------------------------------------------------------
# subcommands; each returns (outputs, table rows or None, table columns, seeds)

def cmd_profiles(config: dict):
    cfg = quad_config(config)
    rows = [profiles.profile_row(config["n"], s, cfg) for s in float_list(config["s"])]
    return {"rows": rows}, rows, profiles.PROFILE_COLUMNS, None


def cmd_lattice(config: dict):
    spec = lattice.LatticeSpec(config["L"], config["d"], config["N"])
    a = config["a"]
    out = {
        "volume": spec.volume,
        "q": spec.q,
        "mass": a,
        "zero_mode_mass": {bc.value: lattice.zero_mode_mass(spec, bc, a) for bc in lattice.BoundaryCondition},
        "free_susceptibility": {
            bc.value: lattice.free_susceptibility(spec, bc, a) for bc in lattice.BoundaryCondition
        },
    }
    if config["format"] == "csv":
        G = lattice.resolvent(spec, config["bc"], a)
        rows = [{"x": x, "y": y, "G": G[x, y]} for x in range(spec.volume) for y in range(spec.volume)]
        return out, rows, ("x", "y", "G"), None
    return out, None, (), None


def cmd_flow(config: dict):
    params = flow_params(config)
    jmax = config["jmax"] if config["jmax"] is not None else min(params.horizon, 200)
    trace = pertflow.derivative_trace(params, config["a"], jmax)
    out = {
        "d": params.d,
        "n": params.n,
        "L": params.L,
        "g0": params.g0,
        "a": config["a"],
        "nu_c": float(trace.nu[0]),
        "trace": trace.records(config["stride"]),
        "scales": _scales(config, params),
    }
    return out, out["trace"], ("j", "g", "nu", "dnu_dnu0", "dnu_da"), None


def _scales(config: dict, params: pertflow.FlowParams) -> dict:
    sc = pertflow.scale_set(config["N"], params)
    return {"wN": sc.wN, "vN": sc.vN, "hN": sc.hN}


def cmd_critical(config: dict):
    params = flow_params(config)
    rel_tol = config["tol"] if config["tol"] is not None else 1e-13
    res = pertflow.bleher_sinai_critical(params, config["a"], rel_tol=rel_tol)
    shooting = pertflow.nu_c(params, config["a"])
    out = {
        "d": params.d,
        "n": params.n,
        "L": params.L,
        "g0": params.g0,
        "a": config["a"],
        "nu_c": res.nu_c,
        "bracket": list(res.bracket),
        "iterations": res.iterations,
        "nu_c_backward_shooting": shooting,
        "nu_c_N": {bc.value: pertflow.effective_critical_point(params, bc, config["N"]) for bc in lattice.BoundaryCondition},
    }
    return out, None, (), None


def cmd_window(config: dict):
    params = flow_params(config)
    cfg = quad_config(config)
    N, bc = config["N"], config["bc"]
    rows = []
    for s in float_list(config["s"]):
        mass = pertflow.renormalized_mass_solve(s, N, bc, params)
        rows.append(
            {
                "s": s,
                "a": mass.a,
                "residual": mass.residual,
                "chi_predicted": pertflow.predicted_susceptibility(s, N, bc, params, cfg),
            }
        )
    out = {
        "d": params.d,
        "n": params.n,
        "L": params.L,
        "g0": params.g0,
        "N": N,
        "bc": bc,
        "nu_c_N": pertflow.effective_critical_point(params, bc, N),
        "scales": _scales(config, params),
        "rows": rows,
    }
    return out, rows, ("s", "a", "residual", "chi_predicted"), None


def _moment_orders(config: dict) -> list[int]:
    orders = [int(p) for p in float_list(config["moments"])]
    if any(p < 1 for p in orders):
        raise ConfigError("moment orders must be >= 1")
    return orders


def _exactrg_inputs(config: dict):
    spec = lattice.LatticeSpec(config["L"], config["d"], config["N"])
    g = config["g"]
    if config["nu"] is None:
        raise ConfigError("exactrg needs --nu")
    return spec, g, config["nu"]


def cmd_exactrg(config: dict):
    if config["action"] == "run":
        return _exactrg_run(config)
    return _exactrg_observe(config)


def _exactrg_run(config: dict):
    seed = require_seed(config)
    spec, g, nu = _exactrg_inputs(config)
    mc = exactrg.MCConfig(samples=config["samples"], seed=seed)
    traj = exactrg.run_pipeline(g, nu, config["n"], spec, config["a"], mc, points=config["points"])
    files = []
    if config["out"] is not None:
        folder = Path(config["out"])
        try:
            folder.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create {folder}: {exc}") from None
        for W in traj:
            path = folder / f"scale_{W.j:02d}.csv"
            exactrg.write_checkpoint(W, path, extra={"g": g, "nu": nu, "a": config["a"], "d": spec.d, "L": spec.L})
            files.append(str(path))
    final = traj[-1]
    out = {
        "scales": [
            {"j": W.j, "radius": W.radius, "minimum": W.minimum, "log_offset": W.log_offset, "max_stderr": float(W.stderr.max())}
            for W in traj
        ],
        "checkpoints": files,
    }
    return out, None, (), final.seeds


def _exactrg_observe(config: dict):
    orders = _moment_orders(config)
    bc = config["bc"]
    if config["input"] is not None:
        W = exactrg.read_checkpoint(config["input"])
        spec = lattice.LatticeSpec(config["L"], config["d"], W.j)
        obs = exactrg.zero_mode_observables(W, bc, config["a"], spec, moments=orders)
        out = {"replicas": 1, "observables": obs.as_dict(), "stderr": None, "kurtosis": obs.kurtosis()}
        return out, None, (), W.seeds
    seed = require_seed(config)
    spec, g, nu = _exactrg_inputs(config)
    replicas = config["replicas"]
    if replicas < 2:
        raise ConfigError("observe needs at least two replicas for a standard error")
    values: dict[str, list[float]] = {}
    lineage = []
    a = config["a"]
    for k in range(replicas):
        mc = exactrg.MCConfig(samples=config["samples"], seed=seed + k)
        W = exactrg.run_pipeline(g, nu, config["n"], spec, a, mc, points=config["points"])[-1]
        obs = exactrg.zero_mode_observables(W, bc, a, spec, moments=orders)
        lineage.append(W.seeds)
        scalars = {"susceptibility": obs.susceptibility, "kurtosis": obs.kurtosis()}
        scalars.update({f"moment_{2 * p}": obs.moments[p] for p in orders})
        for key, value in scalars.items():
            values.setdefault(key, []).append(value)
    summary = {}
    for key, vals in values.items():
        arr = np.array(vals)
        summary[key] = {"mean": float(arr.mean()), "stderr": float(arr.std(ddof=1) / math.sqrt(len(arr)))}
    out = {"replicas": replicas, "bc": bc, "kappa": lattice.zero_mode_mass(spec, bc, a), "estimates": summary}
    return out, None, (), lineage


def cmd_saw(config: dict):
    out: dict = {}
    if config["z"] is not None:
        out["chi"] = saw.saw_chi_exact(config["N"], config["z"])
        out["N"] = config["N"]
        out["z"] = config["z"]
        return out, None, (), None
    rows = [{"N": config["N"], "s": s, "ratio": saw.saw_window_ratio(config["N"], s)} for s in float_list(config["s"])]
    out = {"N": config["N"], "rows": rows}
    return out, rows, ("N", "s", "ratio"), None


def cmd_wsaw(config: dict):
    g = config["g"]
    constants = saw.wsaw_window_constants(g)
    rows = []
    for s in float_list(config["s"]):
        res = saw.wsaw_window_ratio(config["N"], s, g, constants=constants)
        rows.append(
            {
                "N": res["N"],
                "s": res["s"],
                "ratio": res["ratio"],
                "components": {k: res[k] for k in ("G01", "nu_c", "lambda1", "lambda2")},
            }
        )
    out = {"g": g, "N": config["N"], "nu_c": constants.nu_c, "rows": rows}
    flat = [{"N": r["N"], "s": r["s"], "ratio": r["ratio"], **r["components"]} for r in rows]
    return out, flat, ("N", "s", "ratio", "G01", "nu_c", "lambda1", "lambda2"), None


COMMANDS: dict[str, Callable] = {
    "profiles": cmd_profiles,
    "lattice": cmd_lattice,
    "flow": cmd_flow,
    "critical": cmd_critical,
    "window": cmd_window,
    "exactrg": cmd_exactrg,
    "saw": cmd_saw,
    "wsaw": cmd_wsaw,
}


def run_accept(config: dict) -> int:
    suite = config["suite"]
    if suite not in acceptance.SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {sorted(acceptance.SUITES)}")
    seed = 7 if config["seed"] is None else config["seed"]
    opts = acceptance.AcceptanceOptions(seed=seed, quick=config["quick"])
    verdicts = []
    for cid in acceptance.SUITES[suite]:
        verdict = acceptance.run_check(cid, opts)
        verdicts.append(verdict)
        print(verdict.line(), file=sys.stderr if config["out"] is None and config["format"] == "json" else sys.stdout, flush=True)
    passed = all(v.passed for v in verdicts)
    if config["format"] == "json":
        record = make_record(config, {"suite": suite, "passed": passed, "criteria": [v.as_dict() for v in verdicts]}, [seed])
        emit(render_json(record), config)
    elif config["out"] is not None:
        rows = [
            {"id": v.cid, "measured": json.dumps(_clean(v.measured)), "target": json.dumps(_clean(v.target)),
             "tolerance": json.dumps(_clean(v.tolerance)), "passed": v.passed}
            for v in verdicts
        ]
        emit(render_csv(rows, ("id", "measured", "target", "tolerance", "passed")), config)
    return EXIT_OK if passed else 1


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file; flags override it")
    common.add_argument("--d", type=int, help="lattice dimension")
    common.add_argument("--n", type=int, help="number of field components")
    common.add_argument("--L", type=int, help="block side")
    common.add_argument("--N", type=int, help="number of scales, or walk length for saw/wsaw")
    common.add_argument("--g", type=float, help="quartic coupling")
    common.add_argument("--nu", type=float, help="quadratic coupling")
    common.add_argument("--s", help="window variable; comma-separated list where a table is produced")
    common.add_argument("--a", type=float, help="covariance mass")
    common.add_argument("--z", type=float, help="walk fugacity")
    common.add_argument("--bc", choices=("free", "periodic"), help="boundary condition")
    common.add_argument("--seed", type=int, help="seed for stochastic runs")
    common.add_argument("--samples", type=int, help="Monte Carlo samples per grid point")
    common.add_argument("--tol", type=float, help="relative tolerance (quadrature or bisection)")
    common.add_argument("--points", type=int, help="radial grid points")
    common.add_argument("--replicas", type=int, help="independent replicas for standard errors")
    common.add_argument("--moments", help="moment orders p of |Phi|^(2p), comma-separated")
    common.add_argument("--input", help="checkpoint file to read")
    common.add_argument("--jmax", type=int, help="flow horizon")
    common.add_argument("--stride", type=int, help="trace stride")
    common.add_argument("--out", help="output path (folder for exactrg run checkpoints)")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument("--threads", type=int, help="worker cap (all computations are single-threaded)")

    parser = argparse.ArgumentParser(prog="hierfss", description="Finite-size scaling on the hierarchical lattice.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, actions in ACTIONS.items():
        p = sub.add_parser(name, parents=[common])
        real = [act for act in actions if act is not None]
        if real:
            p.add_argument("action", nargs="?" if len(real) == 1 else None, choices=real, default=real[0] if len(real) == 1 else None)
        if name == "accept":
            p.add_argument("--suite", choices=sorted(acceptance.SUITES), help="criteria to run")
            p.add_argument("--quick", action="store_true", help="fewer Monte Carlo samples")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_DOMAIN
    try:
        config = build_config(args)
        if config["command"] == "accept":
            return run_accept(config)
        outputs, rows, columns, seeds = COMMANDS[config["command"]](config)
        if config["command"] == "exactrg" and config["action"] == "run":
            # --out names the checkpoint folder, so the record goes to stdout
            sys.stdout.write(render_json(make_record(config, outputs, seeds)))
        elif config["format"] == "csv" and rows is not None:
            emit(render_csv(rows, columns), config)
        else:
            emit(render_json(make_record(config, outputs, seeds)), config)
        return EXIT_OK
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())
