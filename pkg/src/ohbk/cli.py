"""Command-line interface: ``ohbk run | sweep-beta | sweep-eps | sweep-n | theory | standin``.

Every CSV starts with ``#`` manifest lines, including a ``# command:`` line
that regenerates the file when replayed, followed by a header row and data
rows. Floats are written with 17 significant digits.

Exit codes: 0 success (or admissible), 1 usage/runtime error, 2 momentum
parameter outside the admissible region (``theory`` only).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import io
import shlex
import sys

import numpy as np

from . import __version__
from . import experiments as ex
from . import theory
from .solver import run_paired
from .sources import MeasurementSource, SourceSpec, load_csv_matrix, write_wdbc_standin

EXIT_OK, EXIT_ERROR, EXIT_INADMISSIBLE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.17g}"


def float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# flags that never affect the data and are left out of the replay command
_NOT_REPLAYED = {"out", "stamp", "command", "func"}


def replay_command(args):
    parts = ["ohbk", args.command]
    for key, value in vars(args).items():
        if key in _NOT_REPLAYED or value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            parts.append(flag)
        elif isinstance(value, list):
            parts += [flag, ",".join(fmt(v) if not isinstance(v, str) else v for v in value)]
        elif isinstance(value, float):
            parts += [flag, fmt(value)]
        else:
            parts += [flag, str(value)]
    return shlex.join(parts)


def manifest_lines(args, extra=()):
    lines = [f"ohbk {__version__}", f"command: {replay_command(args)}", f"subcommand: {args.command}"]
    for key, value in vars(args).items():
        if key in _NOT_REPLAYED:
            continue
        lines.append(f"{key}: {value}")
    lines += list(extra)
    if args.stamp:
        lines.append("timestamp: " + _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    return ["# " + line for line in lines]


def emit(args, header, rows, extra_manifest=(), trailer=()):
    buf = io.StringIO()
    for line in manifest_lines(args, extra_manifest):
        buf.write(line + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    for line in trailer:
        buf.write("# " + line + "\n")
    text = buf.getvalue()
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def source_from_args(args, seed=None):
    seed = args.seed if seed is None else seed
    if args.source == "csv":
        if not args.csv_path:
            raise UsageError("--source csv needs --csv-path")
        loaded = load_csv_matrix(args.csv_path, delimiter=args.delimiter, skip_header=args.skip_header,
                                 missing=args.missing, drop_columns=args.drop_columns)
        if args.n is not None and args.n != loaded.values.shape[1]:
            raise UsageError(f"--n {args.n} does not match {loaded.values.shape[1]} CSV columns")
        return SourceSpec("dataset", loaded.values.shape[1], seed, rows=loaded.values,
                          row_mode=args.row_mode, shuffle=args.shuffle), loaded
    if args.csv_path:
        raise UsageError("--csv-path only applies to --source csv")
    if args.n is None:
        raise UsageError(f"--source {args.source} needs --n")
    if args.source == "uniform":
        if not args.lo < args.hi:
            raise UsageError(f"--lo must be below --hi, got {args.lo} >= {args.hi}")
        return SourceSpec("uniform", args.n, seed, lo=args.lo, hi=args.hi), None
    return SourceSpec(args.source, args.n, seed), None


def beta_grid(args):
    if args.beta_grid is not None:
        if not args.beta_grid:
            raise UsageError("--beta-grid is empty")
        return tuple(args.beta_grid)
    if args.beta_steps < 1:
        raise UsageError("--beta-steps must be at least 1")
    if args.beta_steps == 1:
        return (args.beta_min,)
    return tuple(np.linspace(args.beta_min, args.beta_max, args.beta_steps))


def cmd_run(args):
    spec, loaded = source_from_args(args)
    iters = args.iters
    if iters is None:
        if spec.kind == "dataset" and spec.row_mode == "once":
            iters = spec.rows.shape[0]
        else:
            raise UsageError("--iters is required for unbounded sources")
    traj = run_paired(MeasurementSource(spec), [args.beta], iters, record_every=args.record_every)[0]
    extra = [f"source_description: {spec.describe()}"]
    if loaded is not None:
        extra.append(f"csv_dropped_rows: {loaded.dropped_rows}")
    emit(args, ["t", "error"], zip(traj.steps, traj.errors), extra)
    return EXIT_OK


def cmd_sweep_beta(args):
    spec, _ = source_from_args(args)
    iters = args.error_at if args.iters is None else args.iters
    if args.error_at > iters:
        raise UsageError("--error-at exceeds --iters")
    cfg = ex.ExperimentConfig(spec, beta_grid(args), args.trials, iters, args.seed, record_every=iters)
    if args.error_at not in (0, iters):
        cfg.record_every = 1
    res = ex.sweep_beta(cfg, error_at=args.error_at)
    rows = zip(res.values, res.median, res.p25, res.p75)
    trailer = [f"argmin beta={fmt(res.argmin)} median={fmt(res.median[res.argmin_index])}"]
    emit(args, ["beta", "median", "p25", "p75"], rows, trailer=trailer)
    print(trailer[0], file=sys.stderr)
    return EXIT_OK


def _eps_grid(args):
    if args.eps_grid is not None:
        return tuple(args.eps_grid)
    if args.eps_steps == 1:
        return (args.eps_min,)
    return tuple(np.linspace(args.eps_min, args.eps_max, args.eps_steps))


def cmd_sweep_eps(args):
    eps = _eps_grid(args)
    if any(not 0.0 <= e < 1.0 for e in eps):
        raise UsageError("eps values must lie in [0, 1)")
    betas = beta_grid(args)
    res = ex.sweep_epsilon(eps, betas, n=args.n, T=args.iters, trials=args.trials, base_seed=args.seed)
    rows = [(e, b, res[b].mean[i]) for i, e in enumerate(eps) for b in betas]
    emit(args, ["eps", "beta", "mean_log10_error"], rows)
    return EXIT_OK


def cmd_sweep_n(args):
    betas = beta_grid(args)
    res = ex.sweep_length(args.n_set, betas, T=args.iters, trials=args.trials, base_seed=args.seed)
    rows = [(n, b, r.mean[i]) for n, r in res.items() for i, b in enumerate(r.values)]
    trailer = [f"argmin n={n} beta={fmt(r.argmin)} mean_log10_error={fmt(r.mean[r.argmin_index])}"
               for n, r in res.items()]
    emit(args, ["n", "beta", "mean_log10_error"], rows, trailer=trailer)
    for line in trailer:
        print(line, file=sys.stderr)
    return EXIT_OK


def cmd_theory(args):
    if args.closed_form:
        if args.source not in ("sphere", "gaussian"):
            raise UsageError("--closed-form applies to sphere and gaussian sources only")
        if args.n is None:
            raise UsageError("--closed-form needs --n")
        W = theory.closed_form_W_isotropic(args.n)
    else:
        if args.beta_max:
            raise UsageError("--beta-max needs --closed-form")
        spec, _ = source_from_args(args)
        W = theory.estimate_W(spec, args.mc_samples)
    if args.beta is None and not args.beta_max:
        raise UsageError("give --beta, --beta-max, or both")

    fields = [
        ("n", W.matrix.order),
        ("w_samples", "exact" if W.exact else W.sample_count),
        ("w_trace", W.matrix.trace()),
        ("w_frobenius_from_isotropic", W.matrix.frobenius_distance(np.eye(W.matrix.order) / W.matrix.order)),
        ("sigma_min", W.sigma_min),
        ("sigma_max", W.sigma_max),
    ]
    status = EXIT_OK
    if args.beta is not None:
        if args.beta < 0:
            raise UsageError("--beta must be non-negative")
        rep = theory.rate_constants(args.beta, W.sigma_min, W.sigma_max)
        fields += [("beta", rep.beta), ("condition_value", rep.condition_value), ("a1", rep.a1),
                   ("a2", rep.a2), ("q", rep.q), ("delta", rep.delta),
                   ("admissible", "true" if rep.admissible else "false")]
        status = EXIT_OK if rep.admissible else EXIT_INADMISSIBLE
    if args.beta_max:
        fields.append(("beta_max", theory.max_beta_isotropic(args.n)))

    if args.format == "csv":
        emit(args, ["field", "value"], [(k, v if isinstance(v, str) else fmt(v)) for k, v in fields])
    else:
        text = "".join(f"{k} = {v if isinstance(v, str) else fmt(v)}\n" for k, v in fields)
        if args.out in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(args.out, "w") as fh:
                fh.write(text)
    return status


def cmd_standin(args):
    path = write_wdbc_standin(args.out, seed=args.seed)
    print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def _add_source_flags(p, source_default, n_default=None):
    g = p.add_argument_group("measurement source")
    g.add_argument("--source", choices=("gaussian", "uniform", "sphere", "csv"), default=source_default)
    g.add_argument("--n", type=int, default=n_default, help="signal length")
    g.add_argument("--lo", type=float, default=0.0, help="uniform lower bound")
    g.add_argument("--hi", type=float, default=1.0, help="uniform upper bound")
    g.add_argument("--csv-path")
    g.add_argument("--row-mode", choices=("cyclic", "random", "once"), default="once")
    g.add_argument("--shuffle", action="store_true", help="shuffle the single pass (row-mode once)")
    g.add_argument("--delimiter", default=",")
    g.add_argument("--skip-header", action="store_true")
    g.add_argument("--missing", default="?", help="token marking a missing value; such rows are dropped")
    g.add_argument("--drop-columns", type=int_list, default=[0],
                   help="0-based CSV columns to ignore (default: the id column 0)")


def _add_beta_grid_flags(p, lo=0.0, hi=0.6, steps=25):
    g = p.add_argument_group("momentum grid")
    g.add_argument("--beta-grid", type=float_list, help="explicit comma-separated beta values")
    g.add_argument("--beta-min", type=float, default=lo)
    g.add_argument("--beta-max", type=float, default=hi)
    g.add_argument("--beta-steps", type=int, default=steps)


def _common(p, seed=0):
    p.add_argument("--seed", type=int, default=seed, help="base seed; trial i uses seed + i")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--stamp", action="store_true", help="add a timestamp to the manifest (breaks byte-reproducibility)")


def build_parser():
    parser = _Parser(prog="ohbk", description="Online heavy-ball Kaczmarz signal recovery.")
    parser.add_argument("--version", action="version", version=f"ohbk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="error trajectory of one run")
    _add_source_flags(p, "uniform")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--iters", type=int)
    p.add_argument("--record-every", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-beta", help="median/quartile error after a fixed number of steps per beta")
    _add_source_flags(p, "uniform", 50)
    _add_beta_grid_flags(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--error-at", type=int, default=100)
    p.add_argument("--iters", type=int)
    _common(p)
    p.set_defaults(func=cmd_sweep_beta)

    p = sub.add_parser("sweep-eps", help="mean log10 final error on U[eps,1] measurements")
    p.add_argument("--eps-grid", type=float_list)
    p.add_argument("--eps-min", type=float, default=0.0)
    p.add_argument("--eps-max", type=float, default=0.95)
    p.add_argument("--eps-steps", type=int, default=21)
    p.add_argument("--beta-grid", type=float_list, default=[0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--iters", type=int, default=4000)
    p.add_argument("--trials", type=int, default=10)
    _common(p)
    p.set_defaults(func=cmd_sweep_eps, beta_min=None, beta_max=None, beta_steps=None)

    p = sub.add_parser("sweep-n", help="mean log10 final error over beta for several signal lengths")
    p.add_argument("--n-set", type=int_list, default=list(ex.LENGTHS))
    _add_beta_grid_flags(p)
    p.add_argument("--iters", type=int, default=4000)
    p.add_argument("--trials", type=int, default=10)
    _common(p)
    p.set_defaults(func=cmd_sweep_n)

    p = sub.add_parser("theory", help="W spectrum, admissibility and rate constants")
    _add_source_flags(p, "sphere")
    p.add_argument("--beta", type=float)
    p.add_argument("--beta-max", action="store_true", help="print the isotropic admissibility edge")
    p.add_argument("--closed-form", action="store_true", help="use W = I/n (sphere/gaussian)")
    p.add_argument("--mc-samples", type=int, default=theory.DEFAULT_MC_SAMPLES)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    _common(p)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("standin", help="write the synthetic WDBC-layout CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=699)
    p.set_defaults(func=cmd_standin)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "stamp"):
        args.stamp = False
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ohbk {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"ohbk {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
