"""Command-line entry point ``normef``.

Subcommands::

    normef run CONFIG [--seed S] [--out PATH] [--parallel-clients]
    normef grid CONFIG [--eps E] [--step N] [--kmax N]
    normef check CONFIG [--samples N]
    normef gen-data --n N --d D --seed S --out PATH
    normef compare CONFIG_A CONFIG_B [--seed S] [--out PATH]

Exit status is 0 on success, 1 on invalid configs, I/O errors, a failed
grid search or a failed check, and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import sys

from ..core import seeded_rng
from ..problems import LibsvmFormatError, generate_synthetic, save_libsvm
from ..records import format_csv
from .checks import check_suite
from .config import ConfigValidationError, load_config
from .experiment import GridSearchError, compare, grid_search_K, run_experiment


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="normef",
                                 description="Normalized error-feedback experiments.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="run one configured experiment")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="CSV output path (stdout if omitted and run.out unset)")
    p.add_argument("--K", type=int, help="override run.K")
    p.add_argument("--parallel-clients", action="store_true")

    p = sub.add_parser("grid", help="smallest K on a grid reaching min ||grad f||^2 < eps")
    p.add_argument("config")
    p.add_argument("--eps", type=float)
    p.add_argument("--step", type=int, default=500)
    p.add_argument("--kmax", type=int, default=20000)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("check", help="numerical inequality and invariant checks")
    p.add_argument("config")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("gen-data", help="write a synthetic LIBSVM dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="run two configs on shared data and seed")
    p.add_argument("config_a")
    p.add_argument("config_b")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    return ap


def _load(path, seed):
    cfg = load_config(path)
    if seed is not None:
        cfg.run.seed = seed
        cfg.validate()
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args.config, args.seed)
    if args.out:
        cfg.run.out = args.out
    rec = run_experiment(cfg, K=args.K, parallel_clients=args.parallel_clients)
    if cfg.run.out:
        last = rec.rows[-1]
        print(f"wrote {len(rec.rows)} rows to {cfg.run.out}; "
              f"final ||grad f||^2 = {last.grad_norm_sq:.6g}, "
              f"min ||grad f||^2 = {rec.min_grad_norm_sq:.6g}")
    else:
        sys.stdout.write(format_csv(rec))
    return 0


def _cmd_grid(args) -> int:
    cfg = _load(args.config, args.seed)
    try:
        K = grid_search_K(cfg, args.eps, args.step, args.kmax)
    except GridSearchError as e:
        print(f"grid search failed: {e}", file=sys.stderr)
        return 1
    print(K)
    return 0


def _cmd_check(args) -> int:
    cfg = _load(args.config, args.seed)
    report = check_suite(cfg, samples=args.samples)
    print(report.format())
    return 0 if report.passed else 1


def _cmd_gen_data(args) -> int:
    if args.n < 1 or args.d < 1:
        print("error: --n and --d must be positive", file=sys.stderr)
        return 2
    ds = generate_synthetic(args.n, args.d, seeded_rng(args.seed).child(10))
    save_libsvm(ds, args.out)
    print(f"wrote {ds.n} rows with {ds.d} features to {args.out}")
    return 0


def _cmd_compare(args) -> int:
    a = _load(args.config_a, args.seed)
    b = _load(args.config_b, args.seed)
    ra, rb = compare(a, b, out=args.out)
    for cfg, rec in ((a, ra), (b, rb)):
        label = cfg.run.label or cfg.algorithm.variant
        print(f"{label}: K = {len(rec.rows) - 1}, "
              f"final ||grad f||^2 = {rec.final_grad_norm_sq:.6g}, "
              f"min ||grad f||^2 = {rec.min_grad_norm_sq:.6g}")
    return 0


_COMMANDS = {"run": _cmd_run, "grid": _cmd_grid, "check": _cmd_check,
             "gen-data": _cmd_gen_data, "compare": _cmd_compare}


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.cmd](args)
    except ConfigValidationError as e:
        for err in e.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 1
    except LibsvmFormatError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
