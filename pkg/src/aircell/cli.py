"""Command line: train, evaluate, sweep, validate-config.

Exit codes: 0 success, 1 config error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .scenario import ConfigError, load_config


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
        cfg.validate()
    return cfg


def _cmd_train(args) -> int:
    from .runner import train_run

    cfg = _load(args)
    result = train_run(cfg, args.out, resume_from=args.resume)
    print(f"trained {cfg.episodes} episode(s) of {cfg.agent} with {cfg.n_uavs} UAVs")
    print(f"metrics: {result['steps_csv']}")
    if result["checkpoints"]:
        print(f"checkpoints: {result['checkpoints']}")
    return 0


def _read_reference_ee(path) -> float:
    for line in Path(path).read_text().splitlines()[1:]:
        fields = line.split(",")
        if fields and fields[0] == "system_ee":
            return float(fields[1])
    raise ConfigError(f"no system_ee row in reference summary {path}")


def _cmd_evaluate(args) -> int:
    from .runner import evaluate_run

    cfg = _load(args)
    reference_ee = _read_reference_ee(args.reference) if args.reference else None
    result = evaluate_run(cfg, args.checkpoints, args.runs, args.out, reference_ee=reference_ee)
    ee = result["summary"]["system_ee"]
    print(f"evaluated {args.runs} run(s) of {cfg.agent} with {cfg.n_uavs} UAVs")
    print(f"system EE mean={ee['mean']:.6g} std={ee['std']:.6g}")
    print(f"summary: {Path(result['out_dir']) / 'eval_summary.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    from .runner import sweep_run

    cfg = _load(args)
    try:
        uav_counts = [int(v) for v in args.uavs.split(",") if v]
    except ValueError as exc:
        raise ConfigError(f"--uavs must be a comma list of integers: {exc}") from exc
    agent_kinds = [v.strip() for v in args.agents.split(",") if v.strip()]
    rows = sweep_run(cfg, uav_counts, agent_kinds, args.out, eval_runs=args.eval_runs)
    print(f"swept {len(rows)} combination(s); table at {Path(args.out) / 'sweep.csv'}")
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"OK: {args.config} ({cfg.n_uavs} UAVs, agent={cfg.agent}, "
          f"{cfg.episodes}x{cfg.max_steps} steps, seed={cfg.seed})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aircell",
        description="UAV base-station fleet simulator and multi-agent DDQN trainer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train agents on a scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--resume", default=None, help="checkpoint dir to continue from")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="greedy rollouts of trained checkpoints")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoints", default=None)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reference", default=None,
                   help="eval_summary.csv whose mean EE normalizes this run's EE")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="train+evaluate a grid of fleet sizes and agents")
    p.add_argument("--config", required=True)
    p.add_argument("--uavs", required=True, help="comma list, e.g. 2,4,6,8,10,12")
    p.add_argument("--agents", required=True, help="comma list from cmad,mad,random")
    p.add_argument("--out", required=True)
    p.add_argument("--eval-runs", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate-config", help="check a scenario file and exit")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
