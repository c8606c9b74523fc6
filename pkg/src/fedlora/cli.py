"""Operator entry point: run a simulation, sweep an axis, or self-check.

All behavior comes from the config file and flags; nothing is read from
the environment and nothing is interactive. Errors exit nonzero with a
single machine-parsable line on stderr: ``error: <category>: <detail>``.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import checks, output
from .config import ConfigError, load_config
from .orchestrator import SWEEP_AXES, run_simulation, run_sweep
from .task import PartitionInfeasibleError, TrainingDivergedError

CHECK_SUITES = ("estimation", "bandit", "gradients", "aggregation")


def _fail(category: str, detail: str) -> int:
    print(f"error: {category}: {detail}", file=sys.stderr)
    return 2


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        summary = run_simulation(cfg)
    except ConfigError as exc:
        return _fail("config", str(exc))
    except PartitionInfeasibleError as exc:
        return _fail("partition", str(exc))
    except TrainingDivergedError as exc:
        return _fail("training", str(exc))
    output.write_run(args.out, summary)
    print(f"run {output.run_id(summary)}: "
          f"global_accuracy_mean={summary.global_accuracy_mean:.4f} "
          f"noise_level_mean={summary.noise_level_mean:.4f}")
    return 0


def _parse_values(axis: str, raw: str) -> list:
    parts = [p for p in (s.strip() for s in raw.split(",")) if p]
    if not parts:
        raise ConfigError("--values must list at least one value")
    if axis == "n_clients":
        return [int(p) for p in parts]
    if axis == "action_set":
        return parts
    return [float(p) for p in parts]


def cmd_sweep(args) -> int:
    try:
        cfg = load_config(args.config)
        values = _parse_values(args.axis, args.values)
    except ConfigError as exc:
        return _fail("config", str(exc))
    except ValueError as exc:
        return _fail("config", f"bad --values: {exc}")
    cells = run_sweep(cfg, args.axis, values)
    output.write_sweep(args.out, args.axis, cells)
    failed = [c for c in cells if c.error is not None]
    for cell in cells:
        status = "ok" if cell.error is None else f"error ({cell.error})"
        print(f"cell {args.axis}={cell.value}: {status}")
    return 1 if failed else 0


def cmd_check(args) -> int:
    suite = {
        "estimation": checks.check_estimation,
        "bandit": checks.check_bandit,
        "gradients": checks.check_gradients,
        "aggregation": checks.check_aggregation,
    }[args.suite]
    results = suite()
    ok = True
    for name, passed, detail in results:
        print(f"{args.suite}/{name}: {'PASS' if passed else 'FAIL'} ({detail})")
        ok = ok and passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedlora",
        description="Simulate privacy-heterogeneous federated low-rank fine-tuning "
        "with noise-aware weighted aggregation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one simulation from a config file")
    run_p.add_argument("--config", required=True, help="YAML/JSON config path")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run one simulation per axis value")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sweep_p.add_argument("--values", required=True, help="comma-separated axis values")
    sweep_p.add_argument("--out", required=True)
    sweep_p.set_defaults(func=cmd_sweep)

    check_p = sub.add_parser("check", help="run a built-in property suite")
    check_p.add_argument("--suite", required=True, choices=CHECK_SUITES)
    check_p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
