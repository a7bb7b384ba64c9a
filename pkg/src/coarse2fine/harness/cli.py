"""Command-line entry point.

    coarse2fine collect --config exp.cfg --out runs/a
    coarse2fine reach   --config exp.cfg --out runs/a [--trace]
    coarse2fine task    --config exp.cfg --out runs/a
    coarse2fine replay  --config exp.cfg --out runs/a --method "Filtering(Prior)" --correction
    coarse2fine report  --trials runs/a/reach_trials.jsonl --out runs/a

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ..demo import Demonstration
from ..errors import Coarse2FineError, ConfigError
from .config import ExperimentConfig, dump_config, load_config
from .experiments import (
    demo_for_config,
    load_models,
    run_reaching_trials,
    run_task_benchmark,
    save_models,
    scene_for_demo,
    task_trial,
    train_models,
    train_object,
)
from .report import aggregate, emit_report, load_records, success_table_csv

log = logging.getLogger("coarse2fine")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coarse2fine", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="key = value experiment config file")
        p.add_argument("--seed", type=int, help="override experiment.master_seed")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--trace", action="store_true", help="store per-step estimate traces")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("collect", help="collect datasets and fit uncertainty models")
    common(p)
    p.add_argument("--demo", type=Path, help="demonstration JSON (default: scripted demo from config)")

    p = sub.add_parser("reach", help="target-reaching comparison")
    common(p)
    p.add_argument("--models", type=Path, help="fitted models from `collect` (default: fit fresh)")

    p = sub.add_parser("task", help="task-success benchmark with demo replay")
    common(p)
    p.add_argument("--models", type=Path, help="fitted models (default: OUT/models.json)")
    p.add_argument("--demo", type=Path, help="demonstration JSON (default: OUT/demo.json, else scripted)")

    p = sub.add_parser("replay", help="single task episode with full trace dump")
    common(p)
    p.add_argument("--models", type=Path, help="fitted models (default: fit object on the fly)")
    p.add_argument("--demo", type=Path)
    p.add_argument("--method", default="Filtering(Prior)")
    p.add_argument("--object", type=int, default=0)
    p.add_argument("--pose", type=int, default=0)
    p.add_argument("--correction", action="store_true")

    p = sub.add_parser("report", help="aggregate trial records into an error table")
    common(p)
    p.add_argument("--trials", type=Path, nargs="+", required=True, help="trial JSONL files")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    return cfg


def _demo(args, cfg: ExperimentConfig) -> Demonstration:
    if getattr(args, "demo", None):
        return Demonstration.load(args.demo)
    saved = args.out / "demo.json"
    if args.command in ("task", "replay") and saved.exists():
        return Demonstration.load(saved)
    return demo_for_config(cfg)


def cmd_collect(args, cfg: ExperimentConfig) -> None:
    demo = _demo(args, cfg)
    models = train_models(cfg, scene_for_demo(cfg.scene, demo))
    out = args.out
    (out / "datasets").mkdir(parents=True, exist_ok=True)
    for i, m in models.items():
        for region, d in m.datasets.items():
            d.to_jsonl(out / "datasets" / f"object{i}_{region}.jsonl")
    save_models(models, out / "models.json")
    demo.save(out / "demo.json")
    (out / "config.txt").write_text(dump_config(cfg))
    log.info("fitted models for %d objects in %s", len(models), out)


def cmd_reach(args, cfg: ExperimentConfig) -> None:
    models = load_models(args.models) if args.models else None
    records = run_reaching_trials(cfg, models, trace=args.trace)
    emit_report(records, "jsonl", args.out / "reach_trials.jsonl")
    table = aggregate(records, cfg.methods)
    emit_report(table, "csv", args.out / "reach.csv")
    print((args.out / "reach.csv").read_text(), end="")


def cmd_task(args, cfg: ExperimentConfig) -> None:
    models = load_models(args.models or args.out / "models.json")
    demo = _demo(args, cfg)
    records = run_task_benchmark(cfg, demo, models, trace=args.trace)
    emit_report(records, "jsonl", args.out / "task_trials.jsonl")
    emit_report(aggregate(records), "csv", args.out / "task.csv")
    text = success_table_csv(records)
    (args.out / "task_success.csv").write_text(text)
    print(text, end="")


def cmd_replay(args, cfg: ExperimentConfig) -> None:
    demo = _demo(args, cfg)
    if args.method != "Oracle":
        cfg.kind(args.method)
    if args.models:
        models = load_models(args.models)
    else:
        models = {args.object: train_object(cfg, args.object, scene_for_demo(cfg.scene, demo))}
    rec = task_trial(cfg, models, demo, args.object, args.pose, args.method, args.correction, trace=True)
    args.out.mkdir(parents=True, exist_ok=True)
    lines = "".join(json.dumps(s, sort_keys=True) + "\n" for s in rec.per_step_estimates or [])
    (args.out / "replay_estimates.jsonl").write_text(lines)
    emit_report([replace(rec, per_step_estimates=None)], "jsonl", args.out / "replay_trial.jsonl")
    print(json.dumps(replace(rec, per_step_estimates=None).to_dict(), sort_keys=True))


def cmd_report(args, cfg: ExperimentConfig) -> None:
    records = [r for path in args.trials for r in load_records(path)]
    table = aggregate(records)
    emit_report(table, "csv", args.out / "report.csv")
    print((args.out / "report.csv").read_text(), end="")


COMMANDS = {"collect": cmd_collect, "reach": cmd_reach, "task": cmd_task,
            "replay": cmd_replay, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        args.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except (Coarse2FineError, OSError, RuntimeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
