"""Command-line interface: ``retrialq <command> --lambda L --mu M --mu0 R [options]``.

Commands
--------
classify    regime and the stability inequality
rate        optimized convergence-rate certificate (JSON)
verify      certified bound versus the ODE solution over a time grid
transient   truncated forward-equation snapshots
stationary  stationary distribution of the truncated chain
simulate    Monte Carlo state distribution

Exit status: 0 success, 2 usage error, 3 regime refusal, 4 numerical
failure, 5 bound violation (``verify`` only). With ``--out PATH`` a manifest
``PATH.manifest.json`` is written next to the output.
"""

from __future__ import annotations

import argparse
import datetime
import io
import json
import sys

import numpy as np

from . import __version__
from .ergodicity import (
    Regime,
    classify,
    erg_b_interval,
    erg_bound,
    erg_x_interval,
    null_a_interval,
    null_b_interval,
    null_bound,
    optimize_rate,
    stability_gap,
)
from .errors import NumericalError, RegimeError
from .kolmogorov import DEFAULT_M, l1_distance, point_mass, stationary, transient, write_snapshots_csv
from .model import SystemParams, index_to_state
from .weights import erg_alphas
from .simulate import SimConfig, simulate_paths

EXIT_OK, EXIT_USAGE, EXIT_REGIME, EXIT_NUMERIC, EXIT_VIOLATION = 0, 2, 3, 4, 5
VIOLATION_TOL = 1e-9


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v > 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return v


def _nonnegative(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v >= 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be non-negative and finite: {text!r}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _time_grid(args):
    n = int(round(args.t_max / args.t_step))
    return np.linspace(0.0, n * args.t_step, n + 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retrialq",
        description="Ergodicity certificates for the single-server retrial queue "
                    "with constant retrial rate.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lam", type=_positive, required=True, help="arrival rate")
    common.add_argument("--mu", type=_positive, required=True, help="service rate")
    common.add_argument("--mu0", type=_positive, required=True, help="retrial rate")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (default: json for classify/rate, csv otherwise)")
    common.add_argument("--out", default=None, help="output file (default: stdout)")

    numeric = argparse.ArgumentParser(add_help=False)
    numeric.add_argument("--truncation", type=_positive_int, default=DEFAULT_M,
                         help="number of retained states (default: %(default)s)")
    numeric.add_argument("--t-max", type=_nonnegative, default=50.0, help="last time point (default: %(default)s)")
    numeric.add_argument("--t-step", type=_positive, default=1.0, help="time grid spacing (default: %(default)s)")
    numeric.add_argument("--tol", type=_positive, default=1e-10,
                         help="local error tolerance of the ODE solver (default: %(default)s)")

    sub.add_parser("classify", parents=[common], help="regime and stability inequality")
    sub.add_parser("rate", parents=[common], help="optimized rate certificate")

    p = sub.add_parser("verify", parents=[common, numeric], help="check certified bounds against the ODE solution")
    p.add_argument("--k", type=_positive_int, default=21,
                   help="initial state index for the null-ergodic check (default: %(default)s)")
    p.add_argument("--N", type=_positive_int, nargs="+", default=[5, 10, 15],
                   help="cutoff indices for the null-ergodic check (default: %(default)s)")
    p.add_argument("--initial", type=_positive_int, default=1,
                   help="initial state index for the ergodic check (default: %(default)s)")

    p = sub.add_parser("transient", parents=[common, numeric], help="transient distributions")
    p.add_argument("--initial", type=_positive_int, default=1, help="initial state index (default: %(default)s)")

    sub.add_parser("stationary", parents=[common, numeric], help="stationary distribution")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo state distributions")
    p.add_argument("--t-max", type=_positive, default=5.0, help="simulation horizon (default: %(default)s)")
    p.add_argument("--t-step", type=_positive, default=None,
                   help="observation spacing (default: observe at the horizon only)")
    p.add_argument("--paths", type=_positive_int, default=10000, help="trajectories (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="64-bit seed (default: %(default)s)")
    p.add_argument("--initial", type=_positive_int, default=1, help="initial state index (default: %(default)s)")
    return parser


def _params(args):
    return SystemParams(args.lam, args.mu, args.mu0)


def _rows_to_text(header, rows, fmt):
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(f"{v:.15g}" if isinstance(v, float) else str(v) for v in r))
    return "\n".join(lines) + "\n"


def cmd_classify(args):
    params = _params(args)
    regime = classify(params)
    lhs, rhs = params.mu * params.mu0, params.lam * (params.lam + params.mu0)
    report = {"regime": regime.value, "mu*mu0": lhs, "lambda*(lambda+mu0)": rhs,
              "gap": stability_gap(params)}
    if regime is Regime.NULL_ERGODIC:
        report["b_star"] = null_b_interval(params).lo
    elif regime is Regime.EXPONENTIALLY_ERGODIC:
        report["x_star"] = erg_x_interval(params).hi
    else:
        report["note"] = "mu*mu0 == lambda*(lambda+mu0): critical, no certificate from either theorem"
    if args.format == "csv":
        text = "key,value\n" + "".join(f"{k},{v}\n" for k, v in report.items())
    else:
        text = json.dumps(report, indent=2) + "\n"
    return text, EXIT_OK


def cmd_rate(args):
    params = _params(args)
    cert = optimize_rate(params)
    record = cert.to_dict()
    if cert.regime is Regime.NULL_ERGODIC:
        components = {
            "busy": params.lam * (1 - cert.a * cert.b) - params.mu * (1 / cert.b - 1),
            "idle": params.lam * (1 - cert.b) - params.mu0 * (1 / cert.a - 1),
        }
        record["intervals"] = {"b": list(null_b_interval(params)),
                               "a_given_b": list(null_a_interval(params, cert.b))}
    else:
        x = cert.a * cert.b
        alpha2, alpha_odd, alpha_even = erg_alphas(params, cert.a, cert.b)
        components = {"alpha_2": alpha2, "alpha_odd": alpha_odd, "alpha_even": alpha_even}
        record["x"] = x
        record["intervals"] = {"x": list(erg_x_interval(params)),
                               "b_given_x": list(erg_b_interval(params, x))}
    record["components"] = components
    return json.dumps(record, indent=2) + "\n", EXIT_OK


def cmd_verify(args):
    params = _params(args)
    cert = optimize_rate(params)
    times = _time_grid(args)
    rows = []
    if cert.regime is Regime.NULL_ERGODIC:
        M = args.truncation
        snaps = transient(params, point_mass(M, args.k), times, M=M, tol=args.tol)
        header = ["t", "N", "observed", "bound", "slack"]
        for s in snaps:
            for N in args.N:
                observed = float(s.probs[:N].sum())
                bound = null_bound(params, cert, args.k, N, s.t)
                rows.append([s.t, N, observed, bound, bound - observed])
    else:
        pi = stationary(params, M=args.truncation)
        M = pi.size
        p0 = point_mass(M, args.initial)
        snaps = transient(params, p0, times, M=M, tol=args.tol)
        bounds = erg_bound(params, cert, p0, pi, times).value
        header = ["t", "observed", "bound", "slack"]
        for s, bound in zip(snaps, bounds):
            observed = l1_distance(s, pi)
            rows.append([s.t, observed, float(bound), float(bound) - observed])
    worst = min(r[-1] for r in rows)
    code = EXIT_VIOLATION if worst < -VIOLATION_TOL else EXIT_OK
    return _rows_to_text(header, rows, args.format or "csv"), code


def _snapshots_text(snaps, fmt):
    if fmt == "json":
        return json.dumps([{"t": s.t if np.isfinite(s.t) else None, "leak": s.leak,
                            "probs": s.probs.tolist()} for s in snaps]) + "\n"
    return write_snapshots_csv(snaps)


def cmd_transient(args):
    params = _params(args)
    M = args.truncation
    snaps = transient(params, point_mass(M, args.initial), _time_grid(args), M=M, tol=args.tol)
    return _snapshots_text(snaps, args.format), EXIT_OK


def cmd_stationary(args):
    pi = stationary(_params(args), M=args.truncation)
    return _snapshots_text([pi], args.format), EXIT_OK


def cmd_simulate(args):
    params = _params(args)
    if args.t_step is None:
        observe = [args.t_max]
    else:
        n = int(np.floor(args.t_max / args.t_step + 1e-9))
        observe = np.linspace(0.0, n * args.t_step, n + 1)
    cfg = SimConfig(args.t_max, args.paths, args.seed, index_to_state(args.initial))
    result = simulate_paths(params, cfg, observe)
    if args.format == "json":
        text = io.StringIO()
        result.to_csv(text)
        rows = list(text.getvalue().splitlines())
        keys = rows[0].split(",")
        return json.dumps([dict(zip(keys, r.split(","))) for r in rows[1:]], indent=2) + "\n", EXIT_OK
    return result.to_csv(), EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "rate": cmd_rate,
    "verify": cmd_verify,
    "transient": cmd_transient,
    "stationary": cmd_stationary,
    "simulate": cmd_simulate,
}


def _manifest(args, argv):
    settings = {k: v for k, v in vars(args).items() if k not in ("out",)}
    return {
        "command": args.command,
        "parameters": settings,
        "seed": getattr(args, "seed", None),
        "truncation": getattr(args, "truncation", None),
        "argv": list(argv),
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, code = COMMANDS[args.command](args)
    except RegimeError as exc:
        print(f"retrialq: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except NumericalError as exc:
        print(f"retrialq: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        with open(f"{args.out}.manifest.json", "w") as fh:
            json.dump(_manifest(args, argv), fh, indent=2)
            fh.write("\n")
    else:
        sys.stdout.write(text)
    if code == EXIT_VIOLATION:
        print("retrialq: certified bound violated", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
