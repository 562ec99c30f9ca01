"""Batch command-line front end.

Commands
--------
constants     evaluate every closed-form quantity for a parameter set
sample-flats  dump one realization of the restricted flat process as CSV
verify        run a verification experiment (mean | variance | clt |
              extremes | sigma | shells) and emit a JSON report (or a raw
              CSV replication dump with --format csv)

Exit codes: 0 pass/success, 2 verification failure, 1 usage error.  All
randomness flows from --seed; the worker count never changes output bytes.
"""

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import closedform
from .closedform import ModelParams, Window
from .experiments import ESTIMANDS, ExperimentConfig, run_experiment
from .process import SampleRegion, sample_process


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_window(spec: str) -> Window:
    """Window grammar: ``ball:<r>`` or ``box:<a1>,...,<ad>``."""
    kind, _, rest = spec.partition(":")
    try:
        if kind == "ball":
            return Window.ball(float(rest))
        if kind == "box":
            return Window.box([float(a) for a in rest.split(",")])
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad window spec {spec!r}: {exc}") from None
    raise UsageError(f"bad window spec {spec!r}: expected ball:<r> or "
                     f"box:<a1>,...,<ad>")


def window_spec(window: Window) -> str:
    if window.shape == "ball":
        return f"ball:{window.radius:g}"
    return "box:" + ",".join(f"{a:g}" for a in window.halfwidths)


def _float_list(text):
    return tuple(float(x) for x in text.split(","))


def _add_model_args(parser):
    parser.add_argument("--d", type=int, required=True, help="ambient dimension")
    parser.add_argument("--k", type=int, required=True, help="flat dimension")
    parser.add_argument("--t", type=float, default=1.0, help="intensity")


def _add_common_args(parser):
    _add_model_args(parser)
    parser.add_argument("--delta", type=float, default=1.0,
                        help="distance threshold")
    parser.add_argument("--window", default="ball:1",
                        help="ball:<r> or box:<a1>,...,<ad>")
    parser.add_argument("--rho", type=_float_list, default=(1.0,),
                        help="comma-separated window scales")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--output", default=None, help="output path (default stdout)")


def build_parser():
    parser = _Parser(prog="poissonflats", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    constants = sub.add_parser("constants", help="evaluate closed forms")
    _add_common_args(constants)
    constants.add_argument("--sigma", type=float, default=1.0)
    constants.add_argument("--n-max", type=int, default=4)
    constants.add_argument("--shell-radius", type=float, default=1.0)

    flats = sub.add_parser("sample-flats", help="dump one flat sample as CSV")
    _add_model_args(flats)
    flats.add_argument("--radius", type=float, required=True,
                       help="enclosing region radius")
    flats.add_argument("--seed", type=int, default=0)
    flats.add_argument("--output", default=None)

    verify = sub.add_parser("verify", help="run a verification experiment")
    verify.add_argument("estimand", choices=ESTIMANDS)
    _add_common_args(verify)
    verify.add_argument("--reps", type=int, default=1000)
    verify.add_argument("--m", type=int, default=1)
    verify.add_argument("--u-max", type=float, default=None)
    verify.add_argument("--u-grid", type=_float_list, default=None)
    verify.add_argument("--sigma", type=float, default=1.0)
    verify.add_argument("--n-max", type=int, default=4)
    verify.add_argument("--shell-radius", type=float, default=1.0)
    verify.add_argument("--ks-threshold", type=float, default=0.05)
    verify.add_argument("--grassmann-budget", type=int, default=4096)
    verify.add_argument("--offset-budget", type=int, default=16384)
    verify.add_argument("--workers", type=int,
                        default=int(os.environ.get("POISSONFLATS_WORKERS", "1")),
                        help="thread count (speed only, never output bytes)")
    verify.add_argument("--format", choices=("json", "csv"), default="json",
                        help="json summary or raw per-replication csv")
    return parser


def _build_params(args):
    try:
        return ModelParams(d=args.d, k=args.k, t=args.t,
                           delta=getattr(args, "delta", 1.0))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as handle:
            handle.write(text)


def _cmd_constants(args):
    params = _build_params(args)
    window = parse_window(args.window)
    d, k = params.d, params.k
    rho = args.rho[-1]
    rng = np.random.default_rng(args.seed)
    window_rho = window.with_scale(rho)
    if window.shape == "ball":
        chord = closedform.chord_power_integral_ball(d, k + 1, window.radius)
    else:
        chord, _ = closedform.chord_power_integral_box_mc(
            window.halfwidths, k + 1, d, rng=rng)
    payload = {
        "d": d, "k": k, "t": params.t, "delta": params.delta,
        "sigma": args.sigma, "window": window_spec(window), "rho": rho,
        "kappa": {
            "d": closedform.unit_ball_volume(d),
            "d_minus_k": closedform.unit_ball_volume(d - k),
            "d_minus_2k": closedform.unit_ball_volume(d - 2 * k),
        },
        "psi": closedform.psi(d, k),
        "mean_projection_determinant":
            closedform.mean_projection_determinant(d, k),
        "expected_proximity": closedform.expected_proximity(params, window_rho),
        "chord_power_integral": chord,
        "script_I": closedform.script_I(window, d, k, rng=rng),
        "variance_limit": closedform.asymptotic_variance_limit(params, window),
        "beta_small": closedform.beta_small(params, window),
        "beta_sigma": closedform.beta_sigma(params, window, args.sigma),
        "shell_means": {
            str(n): closedform.shell_mean(n, args.shell_radius, params)
            for n in range(1, args.n_max + 1)
        },
    }
    _write(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.output)
    return 0


def _cmd_sample_flats(args):
    params = _build_params(args)
    if args.radius <= 0:
        raise UsageError("radius must be positive")
    rng = np.random.default_rng(args.seed)
    sample = sample_process(SampleRegion(args.radius), params, rng)
    d, k = params.d, params.k
    buffer = io.StringIO()
    buffer.write("# poissonflats-flats-csv v1\n")
    writer = csv.writer(buffer, lineterminator="\n")
    header = (["id"]
              + [f"basis_{row}_{col}" for col in range(k) for row in range(d)]
              + [f"anchor_{row}" for row in range(d)])
    writer.writerow(header)
    for index in range(len(sample)):
        row = ([index]
               + [repr(float(v)) for v in sample.bases[index].ravel(order="F")]
               + [repr(float(v)) for v in sample.anchors[index]])
        writer.writerow(row)
    _write(buffer.getvalue(), args.output)
    return 0


def _cmd_verify(args):
    params = _build_params(args)
    window = parse_window(args.window)
    if args.reps < 2:
        raise UsageError("need at least 2 replications")
    keep_raw = args.format == "csv"
    try:
        config = ExperimentConfig(
            params=params, window=window, estimand=args.estimand,
            rho_grid=args.rho, replications=args.reps, seed=args.seed,
            m=args.m, u_max=args.u_max, u_grid=args.u_grid, sigma=args.sigma,
            n_max=args.n_max, shell_radius=args.shell_radius,
            ks_threshold=args.ks_threshold, workers=max(args.workers, 1),
            keep_raw=keep_raw, grassmann_budget=args.grassmann_budget,
            offset_budget=args.offset_budget)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_experiment(config)
    if args.format == "csv":
        buffer = io.StringIO()
        buffer.write("# poissonflats-raw-csv v1\n")
        writer = csv.writer(buffer, lineterminator="\n")
        for row in report.csv_rows():
            writer.writerow(row)
        _write(buffer.getvalue(), args.output)
    else:
        _write(report.to_json(), args.output)
    if report.passed or report.inconclusive:
        return 0
    return 2


def parse_and_dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "constants":
            return _cmd_constants(args)
        if args.command == "sample-flats":
            return _cmd_sample_flats(args)
        return _cmd_verify(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return parse_and_dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
