"""Command line entry point: ``bmpot <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 1 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .copula import parse_copula
from .estimators import RANK_CONVENTIONS, block_maxima, madogram_pickands, madogram_population, pot_pickands
from .harness import (BENCH_BLOCK_GRID, BENCH_SAMPLE_SIZES, BENCH_THRESHOLD_FRACS, ExperimentConfig,
                      emit_results, bench_model_id, relative_efficiency, resolve_threads, run_mc,
                      write_manifest)
from .sampling import RngStream, sample_bivariate
from .secondorder import so_residual
from .stdf import parse_stdf
from .copula import EvCopula


def _model(value):
    try:
        parse_copula(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return value


def _stdf(value):
    try:
        parse_stdf(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return value


def _float_list(value):
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}") from None


def _int_grid(value):
    """'1-30' or '1,2,5' (ranges and lists may be mixed)."""
    out = []
    try:
        for part in value.split(","):
            a, sep, b = part.partition("-")
            out.extend(range(int(a), int(b) + 1) if sep else [int(a)])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer grid {value!r}") from None
    return out


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_sample(args):
    copula = parse_copula(args.model)
    stream = RngStream(args.seed, args.stream)
    sample = sample_bivariate(copula, args.n, stream, tol=args.tol)
    fh, close = _open_out(args.out)
    try:
        fh.write(f"# model={copula.id} n={args.n} seed={args.seed} stream={args.stream}\n")
        fh.write("u1,u2\n")
        for a, b in sample.data:
            fh.write(f"{float(a)!r},{float(b)!r}\n")
    finally:
        if close:
            fh.close()
    return 0


def _read_sample(path):
    rows = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if len(header) != 2:
        raise ValueError(f"{path}: expected two columns, got header {header}")
    for row in reader:
        if row:
            rows.append([float(row[0]), float(row[1])])
    return np.array(rows)


def cmd_estimate(args):
    data = _read_sample(args.input)
    ts = args.t or [0.5]
    if args.method == "pot":
        est = [pot_pickands(data, args.k, t) for t in ts]
        if args.clamp:
            est = [min(max(e, t, 1 - t), 1.0) for e, t in zip(est, ts)]
    else:
        maxima = block_maxima(data, args.r)
        est = [madogram_pickands(maxima, t, args.rank_convention, args.clamp) for t in ts]
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh)
        w.writerow(["t", "estimate"])
        for t, e in zip(ts, est):
            w.writerow([repr(float(t)), repr(float(e))])
    finally:
        if close:
            fh.close()
    return 0


def _grid_points(lo, hi, step):
    g = np.round(np.arange(lo, hi + step / 2, step), 12)
    return np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)


def cmd_verify_so(args):
    copula = parse_copula(args.model)
    x = _grid_points(args.grid_min, args.grid_max, args.grid_step)
    points = x if args.approach == "pot" else np.exp(-x)
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh)
        w.writerow(["approach", "scale", "x1_or_u1", "x2_or_u2", "residual", "closed_form",
                    "abs_err", "precision_flag"])
        for scale in args.scales:
            for r in so_residual(copula, args.approach, scale, points):
                w.writerow([r.approach, repr(r.scale), repr(r.p1), repr(r.p2), repr(r.residual),
                            repr(r.closed_form), repr(r.abs_err), int(r.precision_flag)])
    finally:
        if close:
            fh.close()
    return 0


def _mc_config(args, model, n):
    return ExperimentConfig(model, n, args.reps, t=args.t, block_grid=args.block_grid,
                            threshold_fracs=args.threshold_fracs, seed=args.seed,
                            truth=args.truth, rank_convention=args.rank_convention)


def cmd_mc(args):
    started = datetime.now(timezone.utc)
    cfg = _mc_config(args, args.model, args.n)
    summary = run_mc(cfg, resolve_threads(args.threads))
    emit_results(summary, args.out_dir, curves=not args.no_curves, started=started)
    print(f"relative_efficiency={relative_efficiency(summary)!r}")
    return 0


def cmd_mc_table(args):
    started = datetime.now(timezone.utc)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    threads = resolve_threads(args.threads)
    sizes = args.n or list(BENCH_SAMPLE_SIZES)
    rows = []
    for n in sizes:
        row = {"n": n}
        for j in (1, 2, 3):
            cfg = _mc_config(args, bench_model_id(j), n)
            cfg.truth = 0.75 if args.truth is None else args.truth
            row[f"psi{j}"] = relative_efficiency(run_mc(cfg, threads))
        rows.append(row)
        logging.getLogger(__name__).info("n=%d done: %s", n, row)
    with open(out_dir / "table1.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "psi1", "psi2", "psi3"])
        for row in rows:
            w.writerow([row["n"]] + [repr(row[f"psi{j}"]) for j in (1, 2, 3)])
    config = {"sample_sizes": sizes, "reps": args.reps, "t": args.t,
              "block_grid": list(args.block_grid), "threshold_fracs": list(args.threshold_fracs),
              "rank_convention": args.rank_convention, "models": [bench_model_id(j) for j in (1, 2, 3)]}
    write_manifest(out_dir, "mc-table", config, args.seed, started, {"table": rows})
    w = csv.writer(sys.stdout)
    w.writerow(["n", "psi1", "psi2", "psi3"])
    for row in rows:
        w.writerow([row["n"]] + [f"{row[f'psi{j}']:.3f}" for j in (1, 2, 3)])
    return 0


def cmd_madogram_check(args):
    l = parse_stdf(args.stdf)
    ts = args.t or [round(0.1 * i, 1) for i in range(1, 10)]
    cinf = EvCopula(l)
    worst = 0.0
    w = csv.writer(sys.stdout)
    w.writerow(["t", "nu", "A_madogram", "A_pickands", "abs_err"])
    for t in ts:
        nu, a = madogram_population(cinf, t)
        ref = float(l.pickands(t))
        worst = max(worst, abs(a - ref))
        w.writerow([repr(t), repr(nu), repr(a), repr(ref), repr(abs(a - ref))])
    if worst >= args.tol:
        print(f"round-trip error {worst:g} exceeds {args.tol:g}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bmpot", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw an exact sample from a copula")
    s.add_argument("--model", type=_model, required=True,
                   help="model id, e.g. product, archimax:psi2:logistic:theta=1.7095, opc:theta=1:beta=2")
    s.add_argument("--n", type=int, required=True, help="sample size")
    s.add_argument("--seed", type=int, default=0, help="64-bit seed")
    s.add_argument("--stream", type=int, default=0, help="stream id (replication index)")
    s.add_argument("--tol", type=float, default=1e-12, help="bisection tolerance for the conditional inverse")
    s.add_argument("--out", help="output CSV (default stdout)")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("estimate", help="estimate the Pickands function from a sample CSV")
    s.add_argument("--input", required=True, help="CSV with two columns (comment lines start with #)")
    s.add_argument("--method", choices=("pot", "bm"), required=True)
    s.add_argument("--k", type=int, help="threshold count for --method pot")
    s.add_argument("--r", type=int, help="block size for --method bm")
    s.add_argument("--t", type=float, action="append", help="evaluation point (repeatable, default 0.5)")
    s.add_argument("--rank-convention", choices=RANK_CONVENTIONS, default="k",
                   help="block-maxima pseudo-observations rank/k or rank/(k+1)")
    s.add_argument("--clamp", action="store_true", help="clip estimates to [max(t,1-t), 1]")
    s.add_argument("--out", help="output CSV (default stdout)")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("verify-so", help="second-order residual table against closed-form limits")
    s.add_argument("--model", type=_model, required=True)
    s.add_argument("--approach", choices=("pot", "bm"), required=True)
    s.add_argument("--scales", type=_float_list, default=[1e2, 1e3, 1e4], help="comma-separated t or r values")
    s.add_argument("--grid-min", type=float, default=0.2)
    s.add_argument("--grid-max", type=float, default=2.0)
    s.add_argument("--grid-step", type=float, default=0.2,
                   help="x-grid step; BM points are u = exp(-x)")
    s.add_argument("--out", help="output CSV (default stdout)")
    s.set_defaults(func=cmd_verify_so)

    def mc_flags(s, with_model):
        if with_model:
            s.add_argument("--model", type=_model, required=True)
            s.add_argument("--n", type=int, required=True)
        else:
            s.add_argument("--n", type=int, action="append",
                           help="sample size (repeatable; default 1000,2000,5000,10000)")
        s.add_argument("--reps", type=int, default=3000)
        s.add_argument("--t", type=float, default=0.5)
        s.add_argument("--block-grid", type=_int_grid, default=list(BENCH_BLOCK_GRID),
                       help="block sizes, e.g. 1-30")
        s.add_argument("--threshold-fracs", type=_float_list, default=list(BENCH_THRESHOLD_FRACS),
                       help="fractions p giving k = floor(p n)")
        s.add_argument("--truth", type=float, help="target A(t) (default: attractor value)")
        s.add_argument("--rank-convention", choices=RANK_CONVENTIONS, default="k1")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--threads", type=int, help="worker processes (env THREADS, default 1)")
        s.add_argument("--out-dir", default="mc_out")

    s = sub.add_parser("mc", help="Monte Carlo variance / bias / MSE over both tuning grids")
    mc_flags(s, True)
    s.add_argument("--no-curves", action="store_true", help="skip curves.dat / curves.gp")
    s.set_defaults(func=cmd_mc)

    s = sub.add_parser("mc-table", help="relative efficiencies of the three piecewise-generator models")
    mc_flags(s, False)
    s.set_defaults(func=cmd_mc_table)

    s = sub.add_parser("madogram-check", help="quadrature round trip A -> nu -> A for an EV copula")
    s.add_argument("--stdf", type=_stdf, required=True, help="e.g. logistic:theta=1.7095112913")
    s.add_argument("--t", type=float, action="append", help="evaluation point (repeatable, default 0.1..0.9)")
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_madogram_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "estimate":
        if args.method == "pot" and args.k is None:
            parser.error("estimate --method pot needs --k")
        if args.method == "bm" and args.r is None:
            parser.error("estimate --method bm needs --r")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code = args.func(args)
        sys.stdout.flush()
        return code
    except BrokenPipeError:
        # downstream reader (e.g. head) closed the pipe; not an error
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return 0
    except (ValueError, RuntimeError, OSError, ZeroDivisionError) as exc:
        print(f"bmpot {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
