"""Command-line entry point.

Subcommands:
  run    execute the configured policies over replicated seeds, write CSVs
  check  run the self-verification suite
  plot   render regret curves from run CSVs

Exit codes: 0 success, 1 runtime/check failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .checks import run_all
from .config import ConfigError, RunConfig, load_config
from .experiment import replicate, summarize, write_csv
from .plotting import SchemaError, plot_regret_curves

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-bandit",
        description="Robust contextual bandit simulation for edge-datacenter selection")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the configured experiment and write CSVs")
    run_p.add_argument("--config", type=Path, default=None, help="INI run config")
    run_p.add_argument("--policy", action="append", default=None,
                       help="policy to run (repeatable); overrides the config list")
    run_p.add_argument("--horizon", type=int, default=None)
    run_p.add_argument("--seeds", type=int, default=None, help="number of replicate seeds")
    run_p.add_argument("--delta", type=float, default=None,
                       help="context error budget; sets both the generator and the defense radius")
    run_p.add_argument("--grid-points", type=int, default=None,
                       help="points per axis of the defense-region grid (odd)")
    run_p.add_argument("--output", type=Path, default=None, help="output directory")
    run_p.add_argument("--jobs", type=int, default=None, help="parallel episode workers")
    run_p.add_argument("--format", choices=("csv",), default="csv")
    run_p.add_argument("--combined", action="store_true",
                       help="write one combined CSV instead of one per policy")

    check_p = sub.add_parser("check", help="run the self-verification suite")
    check_p.add_argument("--config", type=Path, default=None)

    plot_p = sub.add_parser("plot", help="plot regret curves from run CSVs")
    plot_p.add_argument("csv", nargs="+", type=Path, help="run CSV files")
    plot_p.add_argument("--output", type=Path, default=Path("."),
                        help="directory for the rendered images")
    return parser


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    env = config.env
    defense = config.defense
    if args.horizon is not None:
        env = replace(env, horizon=args.horizon)
    if args.delta is not None:
        env = replace(env, delta=args.delta)
        defense = replace(defense, delta=args.delta)
    if args.grid_points is not None:
        defense = replace(defense, grid_points=args.grid_points)
    config = replace(config, env=env, defense=defense)
    if args.policy:
        config = replace(config, policies=tuple(args.policy))
    if args.seeds is not None:
        config = replace(config, n_seeds=args.seeds)
    if args.output is not None:
        config = replace(config, output=args.output)
    if args.jobs is not None:
        config = replace(config, jobs=args.jobs)
    return config


def cmd_run(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_config(args.config), args)
    config.output.mkdir(parents=True, exist_ok=True)
    runs = replicate(config.env, config.policies, config.estimator, config.defense,
                     n_seeds=config.n_seeds, jobs=config.jobs)
    if args.combined:
        target = config.output / "runs.csv"
        write_csv(target, (run for policy in config.policies for run in runs[policy]))
        print(f"wrote {target}")
    else:
        for policy in config.policies:
            target = config.output / f"{policy}.csv"
            write_csv(target, runs[policy])
            print(f"wrote {target}")

    print(f"{'policy':<14} {'true regret':>20} {'robust regret':>20} {'worst-case regret':>20}")
    for policy in config.policies:
        s = summarize(config.env, policy, runs[policy])
        print(f"{policy:<14} "
              f"{s.true_mean[-1]:>12.3f} ± {s.true_std[-1]:<6.3f}"
              f"{s.robust_mean[-1]:>12.3f} ± {s.robust_std[-1]:<6.3f}"
              f"{s.worst_mean[-1]:>12.3f} ± {s.worst_std[-1]:<6.3f}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    results = run_all(config)
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status}  {res.name}: {res.detail}")
        failed += int(not res.passed)
    if failed:
        print(f"{failed} of {len(results)} checks failed")
        return EXIT_FAILURE
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    written = plot_regret_curves(args.csv, args.output)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "check":
            return cmd_check(args)
        return cmd_plot(args)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # runtime failure, distinct from usage errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
