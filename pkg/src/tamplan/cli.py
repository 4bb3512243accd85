"""Command-line entry point.

Commands: gen-data, train, build-mem, eval, export-embeddings.
Exit codes: 0 success, 1 usage or configuration error, 2 provenance error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import pipeline
from .config import ConfigError, PathsConfig, RunConfig, load_config
from .evalharness import EvalMode, save_csv
from .gradcore import CheckpointError
from .tam.memory import ProvenanceError

MODE_CHOICES = [m.value for m in EvalMode] + ["all"]


def _load_run_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "workdir", None) is not None:
        config.paths = PathsConfig(workdir=args.workdir)
    if getattr(args, "episodes", None) is not None:
        if args.command == "gen-data":
            config.data.n_episodes = args.episodes
        else:
            config.eval.n_episodes = args.episodes
    if getattr(args, "attack_p", None) is not None:
        config.eval.attack.probability = args.attack_p
    if getattr(args, "lcs_counts_attacked", False):
        config.eval.lcs_counts_attacked = True
    return config


def cmd_gen_data(args) -> int:
    config = _load_run_config(args)
    manifest = pipeline.generate_dataset(config)
    print(json.dumps({"dataset": str(config.paths.resolve()["dataset"]),
                      "sha256": manifest["sha256"],
                      "episodes": manifest["n_episodes"]}, indent=2))
    return 0


def cmd_train(args) -> int:
    config = _load_run_config(args)
    manifest = pipeline.train_all(config)
    print(json.dumps({"checkpoints": manifest["checkpoint_hashes"],
                      "metrics": manifest["metrics"]}, indent=2, sort_keys=True))
    return 0


def cmd_build_mem(args) -> int:
    config = _load_run_config(args)
    digest = pipeline.build_memory_file(config)
    print(json.dumps({"memory": str(config.paths.resolve()["memory"]),
                      "sha256": digest}, indent=2))
    return 0


def cmd_eval(args) -> int:
    config = _load_run_config(args)
    reports_dir = config.paths.resolve()["reports"]
    if args.ablation:
        reports = pipeline.evaluate(config, [], [], ablation=True)
        by_mode: dict[str, list] = {}
        for report in reports:
            by_mode.setdefault(report.mode, []).append(report)
            report.save_json(reports_dir / f"ablation_{report.method}_{report.mode}.json")
        for mode, rows in by_mode.items():
            save_csv(reports_dir / f"ablation_{mode}.csv", rows)
        print(f"wrote {len(reports)} ablation reports to {reports_dir}")
        return 0

    modes = [EvalMode(m) for m in ([args.mode] if args.mode != "all"
                                   else [m.value for m in EvalMode])]
    reports = pipeline.evaluate(config, modes, [args.method])
    for report in reports:
        report.save_json(reports_dir / f"{report.method}_{report.mode}.json")
    save_csv(reports_dir / "summary.csv", reports)
    for report in reports:
        agg = report.aggregate()
        print(f"{report.mode:24s} {report.method:12s} "
              + " ".join(f"{k}={agg[k]:.4f}" for k in ("lcs", "executability", "f1")))
    return 0


def cmd_export_embeddings(args) -> int:
    config = _load_run_config(args)
    memory = args.memory or config.paths.resolve()["memory"]
    out = args.out or (config.paths.resolve()["workdir"] / "embeddings.csv")
    rows = pipeline.export_embeddings(memory, out)
    print(f"wrote {rows} rows to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tamplan",
        description="Affordance-memory planning pipeline: data, training, "
                    "memory, evaluation.")
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--workdir", help="override the artifact directory")
    parser.add_argument("--seed", type=int, help="override the global seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate the demonstration dataset")
    p.add_argument("--episodes", type=int, help="number of demonstrations")
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train", help="train all networks from the dataset")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("build-mem", help="build the memory graph from checkpoints")
    p.set_defaults(fn=cmd_build_mem)

    p = sub.add_parser("eval", help="run an evaluation protocol")
    p.add_argument("--mode", choices=MODE_CHOICES, default="all")
    p.add_argument("--method", default="full",
                   choices=pipeline.PLANNER_VARIANTS)
    p.add_argument("--episodes", type=int, help="number of test episodes")
    p.add_argument("--attack-p", type=float, dest="attack_p",
                   help="per-step substitution probability for the attack mode")
    p.add_argument("--ablation", action="store_true",
                   help="full variant table for both interactive modes")
    p.add_argument("--lcs-counts-attacked", action="store_true",
                   dest="lcs_counts_attacked",
                   help="score the substituted action instead of the predicted one")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("export-embeddings", help="dump memory node embeddings as CSV")
    p.add_argument("--memory", help="memory file (defaults to the config path)")
    p.add_argument("--out", help="output CSV path")
    p.set_defaults(fn=cmd_export_embeddings)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ProvenanceError, CheckpointError) as err:
        print(f"provenance error: {err}", file=sys.stderr)
        return 2
    except (ConfigError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
