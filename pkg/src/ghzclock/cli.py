"""Command-line front end: error budgets, design scans, metrology curves and protocol runs.

Every output starts with a manifest (command, parameters, config digest,
tool and schema version). Floats are written with 9 significant digits, so
identical inputs give byte-identical files.

Exit codes: 0 success, 1 computation failure, 2 invalid flags or config.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_rates
from .errors import DEFAULT_ATOMS_PER_CLOCK, TERM_LABELS, TERM_NAMES, ErrorInputs, total_error_per_atom
from .geometry import (
    DIMS, LatticeGeometry, integral_I, integral_J, lattice_sum_average,
)
from .metrology import GhzMeasurementModel, average_fisher, average_fisher_approx, gain
from .optimize import DEFAULT_OMEGA, OptimizationError, ScanFailure, maximize_gain, minimize_E, scan_ntilde
from .params import N_TILDE_MAX, N_TILDE_MIN, RydbergConfig, dimensionless_deltas
from .protocol import ProtocolError, run_protocol

SCHEMA_VERSION = "v1"
SIG_DIGITS = 9
U64_MAX = 2**64 - 1
FIDELITY_FLOOR = 1.0 - 1e-10

SCAN_COLUMNS = (
    "ntilde", "dim", "n_opt", "omega_opt", "E_min", *TERM_NAMES, "N_max", "K_opt", "G_max", "F",
)
BUDGET_COLUMNS = ("term", "label", "value", "share_percent")
GAIN_COLUMNS = ("E", "N_max", "K_opt", "M", "G_max", "F", "c", "N_analytic", "G_closed_form")
GAIN_CURVE_COLUMNS = ("E", "N", "G")
FISHER_COLUMNS = ("c", "N", "fisher_avg_norm", "approx_norm")
GEOMETRY_COLUMNS = ("dim", "exponent", "n", "continuum", "lattice", "rel_err")
SIMULATE_COLUMNS = ("branch", "probability", "fidelity", "parity_deviation", "record")
PARAMS_COLUMNS = ("key", "value", "unit")
DEFAULT_FORMAT = {"budget": "json", "simulate": "json", "params": "json"}


class UsageError(Exception):
    pass


def fmt(x):
    """Pinned number formatting shared by CSV and JSON output."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            return None
        return float(f"{float(x):.{SIG_DIGITS}g}")
    return x


_MISSING = object()


def _csv_cell(v) -> str:
    if v is _MISSING:
        return ""
    v = fmt(v)
    if v is None:
        return "nan"
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    if isinstance(v, (dict, list, tuple)):
        return '"' + json.dumps(v, sort_keys=True).replace('"', '""') + '"'
    return str(v)


def _deep_fmt(obj):
    if isinstance(obj, dict):
        return {str(k): _deep_fmt(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_deep_fmt(v) for v in obj]
    return fmt(obj)


def manifest(command: str, params: dict, digest: str, out: str | None) -> dict:
    return {
        "command": command,
        "parameters": _deep_fmt(params),
        "config_digest": digest,
        "tool_version": __version__,
        "schema": SCHEMA_VERSION,
        "outputs": [out] if out else [],
    }


def render(man: dict, columns, rows, fmt_name: str, extra: dict | None = None) -> str:
    if fmt_name == "json":
        payload = {"manifest": man, "columns": list(columns), "rows": _deep_fmt(rows)}
        if extra:
            payload.update(_deep_fmt(extra))
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    for key in ("command", "tool_version", "schema", "config_digest"):
        buf.write(f"# {key}: {man[key]}\n")
    buf.write(f"# parameters: {json.dumps(man['parameters'], sort_keys=True)}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_csv_cell(row.get(c, _MISSING)) for c in columns) + "\n")
    return buf.getvalue()


# -- argument handling ----------------------------------------------------------
def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _ntilde(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"ntilde must be an integer, got {text!r}") from None
    if not N_TILDE_MIN <= v <= N_TILDE_MAX:
        raise argparse.ArgumentTypeError(f"ntilde must lie in [{N_TILDE_MIN}, {N_TILDE_MAX}]")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError("expected a positive finite number")
    return v


def _omega(text: str):
    return "free" if text == "free" else _positive_float(text)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("expected an integer >= 1")
    return v


def _dims(choice: str) -> tuple[str, ...]:
    return DIMS if choice == "both" else (choice,)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value constants file")
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file (default: stdout)")
    common.add_argument("--seed", type=_seed, default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="ghzclock", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def design_flags(p, dim_default="3d", with_both=False):
        p.add_argument("--dim", choices=DIMS + (("both",) if with_both else ()), default=dim_default)
        p.add_argument("--omega", type=_omega, default=DEFAULT_OMEGA,
                       help='Rabi frequency in units of the Rydberg loss rate, or "free"')
        p.add_argument("--variant", choices=("photonic", "messenger"), default="photonic")
        p.add_argument("--atoms-per-clock", type=_positive_float, default=DEFAULT_ATOMS_PER_CLOCK)

    p = sub.add_parser("budget", parents=[common], help="per-atom error budget")
    p.add_argument("--ntilde", type=_ntilde, required=True)
    p.add_argument("--n", type=_positive_int, required=True, help="atoms per ensemble")
    p.add_argument("--dim", choices=DIMS, default="3d")
    p.add_argument("--omega", type=_positive_float, default=DEFAULT_OMEGA)
    p.add_argument("--variant", choices=("photonic", "messenger"), default="photonic")
    p.add_argument("--atoms-per-clock", type=_positive_float, default=DEFAULT_ATOMS_PER_CLOCK)

    p = sub.add_parser("optimize", parents=[common], help="optimal ensemble size at one ntilde")
    p.add_argument("--ntilde", type=_ntilde, required=True)
    design_flags(p, with_both=True)

    p = sub.add_parser("scan", parents=[common], help="optimal design across ntilde")
    p.add_argument("--range", nargs=2, type=_ntilde, metavar=("LO", "HI"), default=(N_TILDE_MIN, N_TILDE_MAX))
    design_flags(p, dim_default="both", with_both=True)

    p = sub.add_parser("gain", parents=[common], help="optimal network size for a per-atom error")
    p.add_argument("--E", type=_positive_float, required=True, dest="E")
    p.add_argument("--atoms-per-clock", type=_positive_float, default=DEFAULT_ATOMS_PER_CLOCK)
    p.add_argument("--n-opt", type=_positive_int, default=1)
    p.add_argument("--curve", type=int, default=0, metavar="POINTS",
                   help="emit G(N) at up to POINTS distinct integers N, log-spaced in [2, 10/E]")

    p = sub.add_parser("fisher", parents=[common], help="phase-averaged Fisher information vs contrast")
    p.add_argument("--grid", type=_positive_int, default=101)
    p.add_argument("--N", type=_positive_int, default=10, dest="N")

    p = sub.add_parser("geometry", parents=[common], help="pair-distance moments and lattice oracle")
    p.add_argument("--dim", choices=DIMS + ("both",), default="both")
    p.add_argument("--n", type=_positive_int, nargs="*", default=None,
                   help="lattice sizes for the brute-force check (default: 146 in 3D, 1000 in 2D)")

    p = sub.add_parser("simulate", parents=[common], help="exact protocol simulation")
    p.add_argument("--clocks", type=_positive_int, default=2)
    p.add_argument("--ensembles", type=_positive_int, default=1)
    p.add_argument("--atoms", type=_positive_int, default=2)
    p.add_argument("--variant", choices=("photonic", "messenger"), default="photonic")
    p.add_argument("--mode", choices=("sample", "exhaustive"), default="sample")
    p.add_argument("--trace", action="store_true", help="include per-step states in exhaustive mode")

    p = sub.add_parser("params", parents=[common], help="derived Rydberg and lower-level constants")
    p.add_argument("--ntilde", type=_ntilde, default=120)
    return parser


# -- commands ------------------------------------------------------------------
def cmd_budget(args, rates):
    inp = ErrorInputs(
        n=args.n, omega=args.omega, dim=args.dim, rydberg=RydbergConfig(args.ntilde),
        rates=rates, atoms_per_clock=args.atoms_per_clock, variant=args.variant,
    )
    b = total_error_per_atom(inp)
    shares = b.shares()
    rows = [
        {"term": k, "label": TERM_LABELS[k], "value": v, "share_percent": shares[k]}
        for k, v in b.terms.items()
    ]
    rows.append({"term": "E", "label": "total per atom", "value": b.E, "share_percent": 100.0})
    extra = {
        "aggregates": {
            "eps_local": b.eps_local, "eps_nonlocal": b.eps_nonlocal, "E": b.E,
            "tau_pulse_s": b.tau_pulse, "p_double": b.p_double,
        },
    }
    return BUDGET_COLUMNS, rows, extra


def _scan_row(res, plan):
    row = {
        "ntilde": res.n_tilde, "dim": res.dim, "n_opt": res.n_opt,
        "omega_opt": res.omega_opt, "E_min": res.E_min,
        **res.budget_at_opt.terms,
        "N_max": plan.N_max, "K_opt": plan.K_opt, "G_max": plan.G_max, "F": plan.fidelity_F,
    }
    return row


def _plan_rows(results, atoms_per_clock):
    rows, failures = [], []
    for res in results:
        if isinstance(res, ScanFailure):
            failures.append(res)
            rows.append({"ntilde": res.n_tilde, "dim": res.dim})
            continue
        rows.append(_scan_row(res, maximize_gain(res.E_min, atoms_per_clock, res.n_opt)))
    return rows, failures


def cmd_optimize(args, rates):
    results = []
    for dim in _dims(args.dim):
        try:
            results.append(minimize_E(args.ntilde, dim, args.omega, args.variant, rates, args.atoms_per_clock))
        except OptimizationError as exc:
            results.append(ScanFailure(args.ntilde, dim, str(exc)))
    rows, failures = _plan_rows(results, args.atoms_per_clock)
    if len(failures) == len(results):
        raise OptimizationError("; ".join(f.reason for f in failures))
    _report_failures(failures)
    return SCAN_COLUMNS, rows, None


def cmd_scan(args, rates):
    lo, hi = args.range
    if lo > hi:
        raise UsageError("--range LO HI needs LO <= HI")
    results = []
    for dim in _dims(args.dim):
        results += scan_ntilde(range(lo, hi + 1), dim, args.omega, args.variant, rates, args.atoms_per_clock)
    results.sort(key=lambda r: (r.n_tilde, r.dim))
    rows, failures = _plan_rows(results, args.atoms_per_clock)
    if len(failures) == len(results):
        raise OptimizationError("every scan point failed: " + failures[0].reason)
    _report_failures(failures)
    return SCAN_COLUMNS, rows, None


def _report_failures(failures):
    for f in failures:
        print(f"warning: ntilde={f.n_tilde} dim={f.dim}: {f.reason}", file=sys.stderr)


def cmd_gain(args, rates):
    if args.curve < 0 or args.curve == 1:
        raise UsageError("--curve needs 0 (off) or at least 2 points")
    if args.curve:
        Ns = np.unique(np.round(np.geomspace(2, max(3.0, 10.0 / args.E), args.curve)).astype(int))
        rows = [{"E": args.E, "N": int(N), "G": float(gain(int(N), args.E))} for N in Ns]
        return GAIN_CURVE_COLUMNS, rows, None
    plan = maximize_gain(args.E, args.atoms_per_clock, args.n_opt)
    row = {
        "E": args.E, "N_max": plan.N_max, "K_opt": plan.K_opt, "M": plan.M, "G_max": plan.G_max,
        "F": plan.fidelity_F, "c": plan.contrast_c, "N_analytic": plan.N_analytic,
        "G_closed_form": plan.G_closed_form,
    }
    return GAIN_COLUMNS, [row], None


def cmd_fisher(args, rates):
    if args.grid < 2:
        raise UsageError("--grid needs at least 2 points")
    rows = []
    N2 = float(args.N) ** 2
    for c in np.linspace(0.0, 1.0, args.grid):
        model = GhzMeasurementModel(args.N, float(c))
        rows.append({
            "c": float(c), "N": args.N,
            "fisher_avg_norm": average_fisher(model) / N2,
            "approx_norm": average_fisher_approx(model) / N2,
        })
    return FISHER_COLUMNS, rows, None


def cmd_geometry(args, rates):
    default_n = {"3d": [146], "2d": [1000]}
    rows = []
    for dim in _dims(args.dim):
        for exponent, moment in ((6, integral_I(dim)), (12, integral_J(dim))):
            rows.append({"dim": dim, "exponent": exponent, "continuum": moment})
            sizes = default_n[dim] if args.n is None else args.n
            for n in sizes:
                geom = LatticeGeometry(dim, n)
                lat = lattice_sum_average(geom, exponent) / geom.radius_R**exponent
                rows.append({
                    "dim": dim, "exponent": exponent, "n": n, "continuum": moment,
                    "lattice": lat, "rel_err": lat / moment - 1.0,
                })
    return GEOMETRY_COLUMNS, rows, None


def cmd_simulate(args, rates):
    results = run_protocol(
        args.clocks, args.ensembles, args.atoms, args.variant, args.mode,
        seed=getattr(args, "seed", None), trace=args.trace or args.mode == "sample",
    )
    rows, branches = [], []
    for i, r in enumerate(results):
        record = _deep_fmt(r.record)
        rows.append({
            "branch": i, "probability": r.probability, "fidelity": r.fidelity,
            "parity_deviation": r.parity_deviation, "record": record,
        })
        entry = {"branch": i, "final_state": r.state.describe()}
        if r.trace:
            entry["trace"] = [{"step": name, "state": st} for name, st in r.trace]
        branches.append(entry)
    worst = min(r.fidelity for r in results)
    extra = {"final_fidelity": worst, "branch_count": len(results), "branches": branches}
    if worst < FIDELITY_FLOOR:
        raise ProtocolError(f"final GHZ fidelity {worst:.12f} below {FIDELITY_FLOOR}")
    return SIMULATE_COLUMNS, rows, extra


def cmd_params(args, rates):
    cfg = RydbergConfig(args.ntilde)
    d11, d12 = dimensionless_deltas(cfg, rates.lattice_a)
    rows = [
        {"key": "ntilde", "value": args.ntilde, "unit": ""},
        {"key": "gamma", "value": cfg.gamma, "unit": "1/s"},
        {"key": "C11_6", "value": cfg.c11_6, "unit": "J m^6"},
        {"key": "C12_3", "value": cfg.c12_3, "unit": "J m^3"},
        {"key": "delta11", "value": d11, "unit": ""},
        {"key": "delta12", "value": d12, "unit": ""},
    ]
    units = {"gamma_s": "1/s", "gamma_e": "1/s", "gamma_dark": "1/s", "link_length_L": "m",
             "lattice_a": "m", "k_e": "1/m", "finesse_f": ""}
    for key, unit in units.items():
        rows.append({"key": key, "value": getattr(rates, key), "unit": unit})
    return PARAMS_COLUMNS, rows, None


COMMANDS = {
    "budget": cmd_budget, "optimize": cmd_optimize, "scan": cmd_scan, "gain": cmd_gain,
    "fisher": cmd_fisher, "geometry": cmd_geometry, "simulate": cmd_simulate, "params": cmd_params,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    config = getattr(args, "config", None)
    out = getattr(args, "out", None)
    fmt_name = getattr(args, "format", None) or DEFAULT_FORMAT.get(args.command, "csv")
    try:
        rates, digest = load_rates(config)
    except (ConfigError, OSError, TypeError, ValueError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    params = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("command", "config", "out", "format")
    }
    try:
        columns, rows, extra = COMMANDS[args.command](args, rates)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = render(manifest(args.command, params, digest, out), columns, rows, fmt_name, extra)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
