"""Pipeline stages behind the CLI: data generation, training, memory
building, planner assembly, and evaluation, with provenance carried as
sha256 hashes from every artifact to the artifacts derived from it."""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

import numpy as np

from . import actiongen as ag
from . import evalharness as ev
from . import homesim as hs
from . import tam
from .config import RunConfig
from .gradcore import file_sha256
from .tam.memory import ProvenanceError

CHECKPOINT_NAMES = {
    "affordance": "affordance.ckpt",
    "assoc": "goal_assoc.ckpt",
    "assoc_naive": "goal_assoc_naive.ckpt",
    "localization": "localization.ckpt",
    "decoder_full": "decoder_full.ckpt",
    "decoder_goal_only": "decoder_goal_only.ckpt",
    "decoder_naive": "decoder_naive.ckpt",
    "linear_head": "linear_head.ckpt",
}

PLANNER_VARIANTS = ["full", "no_replan", "pixel_localize", "no_trans",
                    "naive_goal", "goal_only"]


def generate_dataset(config: RunConfig) -> dict:
    """Write the demonstration dataset and its manifest; returns the manifest."""
    paths = config.paths.resolve()
    demos, resamples = hs.generate_demonstrations(
        config.data.n_episodes, seed=config.seed,
        apartment_seeds=config.data.train_apartment_seeds, config=config.sim)
    digest = hs.save_dataset(paths["dataset"], demos)

    per_goal = Counter(d.goal.id for d in demos)
    spawn_by_goal: dict[int, Counter] = {}
    for demo in demos:
        spawn_by_goal.setdefault(demo.goal.id, Counter())[demo.spawn_room] += 1
    manifest = {
        "sha256": digest,
        "n_episodes": len(demos),
        "seed": config.seed,
        "config_hash": config.config_hash(),
        "feature_dim": hs.FEATURE_DIM,
        "resampled_episodes": resamples,
        "per_goal_counts": {str(g): per_goal[g] for g in sorted(per_goal)},
        "spawn_rooms_per_goal": {
            str(g): dict(sorted(spawn_by_goal[g].items()))
            for g in sorted(spawn_by_goal)
        },
    }
    with open(paths["dataset_manifest"], "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    config.save(paths["resolved_config"])
    return manifest


def _verify_dataset(config: RunConfig) -> tuple[list, str]:
    paths = config.paths.resolve()
    if not paths["dataset"].exists():
        raise FileNotFoundError(f"dataset not found at {paths['dataset']}")
    digest = file_sha256(paths["dataset"])
    if paths["dataset_manifest"].exists():
        with open(paths["dataset_manifest"], "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        if manifest["sha256"] != digest:
            raise ProvenanceError(
                f"dataset file hash {digest[:12]} does not match manifest "
                f"{manifest['sha256'][:12]}"
            )
    return hs.load_dataset(paths["dataset"]), digest


def _write_curve(path: Path, curve: list[float]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,loss\n")
        for i, value in enumerate(curve):
            fh.write(f"{i},{value:.10f}\n")


def train_all(config: RunConfig) -> dict:
    """Train every network; returns the training manifest (hashes + metrics)."""
    demos, dataset_hash = _verify_dataset(config)
    paths = config.paths.resolve()
    ckpt_dir = paths["checkpoints"]
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    vocab = ag.ActionVocabulary()
    stamp = {"dataset_hash": dataset_hash, "config_hash": config.config_hash()}

    metrics: dict = {}
    curves: dict[str, list[float]] = {}

    encoder, rep = tam.train_affordance(demos, config.tam, seed=config.seed + 1,
                                        feature_dim=hs.FEATURE_DIM)
    encoder.save(ckpt_dir / CHECKPOINT_NAMES["affordance"], stamp)
    metrics["affordance"] = rep.metrics
    curves["affordance"] = rep.loss_curve

    assoc, rep = tam.train_goal_association(demos, encoder, config.tam,
                                            seed=config.seed + 2)
    assoc.save(ckpt_dir / CHECKPOINT_NAMES["assoc"], stamp)
    metrics["assoc"] = rep.metrics
    curves["assoc"] = rep.loss_curve

    assoc_naive, rep = tam.train_goal_association(demos, encoder, config.tam,
                                                  seed=config.seed + 2, naive=True)
    assoc_naive.save(ckpt_dir / CHECKPOINT_NAMES["assoc_naive"], stamp)
    metrics["assoc_naive"] = rep.metrics
    curves["assoc_naive"] = rep.loss_curve

    localizer, rep = tam.train_localization(demos, config.tam, seed=config.seed + 3,
                                            feature_dim=hs.FEATURE_DIM)
    localizer.save(ckpt_dir / CHECKPOINT_NAMES["localization"], stamp)
    metrics["localization"] = rep.metrics
    curves["localization"] = rep.loss_curve

    memory = tam.build_memory(demos, encoder, localizer, dataset_hash=dataset_hash)
    learned = tam.LearnedLocalizer(localizer)
    retriever = tam.MemoryRetriever(memory, learned, assoc, k=config.tam.retrieve_k,
                                    use_replan=True, replan_config=config.replan)
    retriever_naive = tam.MemoryRetriever(memory, learned, assoc_naive,
                                          k=config.tam.retrieve_k, use_replan=True,
                                          replan_config=config.replan)

    dec, rep = ag.train_decoder(demos, retriever, vocab, config.decoder,
                                seed=config.seed + 4, dataset_hash=dataset_hash)
    dec.save(ckpt_dir / CHECKPOINT_NAMES["decoder_full"], stamp)
    metrics["decoder_full"] = rep.metrics
    curves["decoder_full"] = rep.loss_curve

    dec_goal, rep = ag.train_decoder(demos, None, vocab, config.decoder,
                                     seed=config.seed + 4, use_memory=False,
                                     dataset_hash=dataset_hash)
    dec_goal.save(ckpt_dir / CHECKPOINT_NAMES["decoder_goal_only"], stamp)
    metrics["decoder_goal_only"] = rep.metrics
    curves["decoder_goal_only"] = rep.loss_curve

    dec_naive, rep = ag.train_decoder(demos, retriever_naive, vocab, config.decoder,
                                      seed=config.seed + 4, use_goal=False,
                                      dataset_hash=dataset_hash)
    dec_naive.save(ckpt_dir / CHECKPOINT_NAMES["decoder_naive"], stamp)
    metrics["decoder_naive"] = rep.metrics
    curves["decoder_naive"] = rep.loss_curve

    linear, rep = ag.train_linear_head(demos, retriever, vocab, config.decoder,
                                       seed=config.seed + 4, dataset_hash=dataset_hash)
    linear.save(ckpt_dir / CHECKPOINT_NAMES["linear_head"], stamp)
    curves["linear_head"] = rep.loss_curve

    for name, curve in curves.items():
        _write_curve(ckpt_dir / "curves" / f"{name}_loss.csv", curve)

    manifest = {
        "dataset_hash": dataset_hash,
        "config_hash": config.config_hash(),
        "checkpoint_hashes": {
            key: file_sha256(ckpt_dir / fname)
            for key, fname in CHECKPOINT_NAMES.items()
        },
        "metrics": metrics,
    }
    with open(paths["train_manifest"], "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return manifest


def _load_checkpoints(config: RunConfig) -> dict:
    paths = config.paths.resolve()
    ckpt_dir = paths["checkpoints"]
    for fname in CHECKPOINT_NAMES.values():
        if not (ckpt_dir / fname).exists():
            raise FileNotFoundError(f"missing checkpoint {ckpt_dir / fname}")
    return {
        "encoder": tam.AffordanceEncoder.load(ckpt_dir / CHECKPOINT_NAMES["affordance"]),
        "assoc": tam.GoalAssociator.load(ckpt_dir / CHECKPOINT_NAMES["assoc"]),
        "assoc_naive": tam.GoalAssociator.load(ckpt_dir / CHECKPOINT_NAMES["assoc_naive"]),
        "localizer": tam.LocalizationNet.load(ckpt_dir / CHECKPOINT_NAMES["localization"]),
        "decoder_full": ag.TransformerPlanner.load(ckpt_dir / CHECKPOINT_NAMES["decoder_full"]),
        "decoder_goal_only": ag.TransformerPlanner.load(
            ckpt_dir / CHECKPOINT_NAMES["decoder_goal_only"]),
        "decoder_naive": ag.TransformerPlanner.load(ckpt_dir / CHECKPOINT_NAMES["decoder_naive"]),
        "linear_head": ag.LinearPlanner.load(ckpt_dir / CHECKPOINT_NAMES["linear_head"]),
    }


def build_memory_file(config: RunConfig) -> str:
    """Build and save the memory graph; returns its file hash."""
    demos, dataset_hash = _verify_dataset(config)
    paths = config.paths.resolve()
    nets = _load_checkpoints(config)
    for key in ("encoder", "localizer"):
        trained_on = nets[key].meta.get("dataset_hash")
        if trained_on != dataset_hash:
            raise ProvenanceError(
                f"{key} checkpoint trained on {str(trained_on)[:12]}, dataset is "
                f"{dataset_hash[:12]}"
            )
    ckpt_hashes = {
        key: file_sha256(paths["checkpoints"] / fname)
        for key, fname in CHECKPOINT_NAMES.items()
    }
    memory = tam.build_memory(demos, nets["encoder"], nets["localizer"],
                              dataset_hash=dataset_hash,
                              checkpoint_hashes=ckpt_hashes)
    _annotate_rooms(memory, demos)
    memory.save(paths["memory"])
    return file_sha256(paths["memory"])


def _annotate_rooms(memory: tam.TamGraph, demos) -> None:
    """Attach the agent's room to each node label (export metadata)."""
    rooms: dict[int, list[str]] = {}
    for demo in demos:
        room = demo.spawn_room
        track = []
        for _, action in demo.steps:
            if action.verb == "WALK":
                room = action.args[0]
            track.append(room)
        rooms[demo.episode_id] = track
    for label in memory.labels:
        label["room"] = rooms[label["episode_id"]][label["step_index"]]


def load_planner_bundle(config: RunConfig) -> dict:
    """Everything eval needs, with provenance verified (raises ProvenanceError)."""
    demos, dataset_hash = _verify_dataset(config)
    paths = config.paths.resolve()
    nets = _load_checkpoints(config)
    if not paths["memory"].exists():
        raise FileNotFoundError(f"memory file not found at {paths['memory']}")
    memory = tam.TamGraph.load(paths["memory"])
    if memory.provenance.get("dataset_hash") != dataset_hash:
        raise ProvenanceError("memory was built from a different dataset")
    recorded = memory.provenance.get("checkpoint_hashes", {})
    for key, fname in CHECKPOINT_NAMES.items():
        actual = file_sha256(paths["checkpoints"] / fname)
        if recorded.get(key) != actual:
            raise ProvenanceError(f"checkpoint {key} changed since memory build")
    return {"demos": demos, "dataset_hash": dataset_hash, "memory": memory,
            "vocab": ag.ActionVocabulary(), **nets}


def make_planner(bundle: dict, variant: str, config: RunConfig):
    memory, vocab = bundle["memory"], bundle["vocab"]
    learned = tam.LearnedLocalizer(bundle["localizer"])

    def retriever(localizer=learned, assoc_key="assoc", use_replan=True):
        return tam.MemoryRetriever(memory, localizer, bundle[assoc_key],
                                   k=config.tam.retrieve_k, use_replan=use_replan,
                                   replan_config=config.replan)

    if variant == "full":
        return ag.TamPlanner(bundle["decoder_full"], vocab, retriever())
    if variant == "no_replan":
        return ag.TamPlanner(bundle["decoder_full"], vocab,
                             retriever(use_replan=False))
    if variant == "pixel_localize":
        return ag.TamPlanner(bundle["decoder_full"], vocab,
                             retriever(localizer=tam.RawFeatureLocalizer()))
    if variant == "no_trans":
        return ag.TamPlanner(bundle["linear_head"], vocab, retriever())
    if variant == "naive_goal":
        return ag.TamPlanner(bundle["decoder_naive"], vocab,
                             retriever(assoc_key="assoc_naive"))
    if variant == "goal_only":
        return ag.TamPlanner(bundle["decoder_goal_only"], vocab)
    raise ValueError(f"unknown planner variant {variant!r}")


def evaluate(config: RunConfig, modes: list[ev.EvalMode], methods: list[str],
             ablation: bool = False) -> list[ev.EvalReport]:
    bundle = load_planner_bundle(config)
    episodes = ev.build_test_episodes(config.eval, config.sim)
    hashes = {"dataset": bundle["dataset_hash"],
              "memory": file_sha256(config.paths.resolve()["memory"]),
              "config": config.config_hash()}
    reports = []
    if ablation:
        reports.extend(ev.run_ablation_suite(
            lambda variant: make_planner(bundle, variant, config),
            episodes, config.eval))
        for report in reports:
            report.config_hashes.update(hashes)
        return reports
    for mode in modes:
        for method in methods:
            planner = make_planner(bundle, method, config)
            reports.append(ev.run_evaluation(planner, episodes, mode, config.eval,
                                             method=method, config_hashes=hashes))
    return reports


def export_embeddings(memory_path, out_path) -> int:
    """CSV of node embeddings and labels; returns the row count."""
    memory = tam.TamGraph.load(memory_path)
    key_dim = memory.keys.shape[1]
    value_dim = memory.values_z.shape[1]
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        header = ["node_id", "goal_id", "action", "room", "episode_id", "step_index"]
        header += [f"key_{i}" for i in range(key_dim)]
        header += [f"value_{i}" for i in range(value_dim)]
        fh.write(",".join(header) + "\n")
        for i in range(len(memory)):
            label = memory.labels[i]
            action = "_".join([label["verb"], *label["args"]])
            row = [str(i), str(label["goal_id"]), action,
                   str(label.get("room", "")), str(label["episode_id"]),
                   str(label["step_index"])]
            row += [f"{v:.8f}" for v in memory.keys[i]]
            row += [f"{v:.8f}" for v in memory.values_z[i]]
            fh.write(",".join(row) + "\n")
    return len(memory)
