"""One reproducible configuration object for the whole pipeline.

Every command materializes its defaults into a resolved JSON config next
to the artifacts it writes; a run is reproducible from that file alone.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .actiongen import DecoderTrainConfig
from .evalharness import AttackConfig, EvalConfig
from .homesim import SimConfig
from .tam import ReplanConfig, TamConfig


@dataclass
class DataConfig:
    n_episodes: int = 200
    train_apartment_seeds: list[int] = field(default_factory=lambda: list(range(100, 200)))


@dataclass
class PathsConfig:
    workdir: str = "runs"

    def resolve(self) -> dict[str, Path]:
        base = Path(self.workdir)
        return {
            "workdir": base,
            "dataset": base / "dataset.jsonl",
            "dataset_manifest": base / "dataset_manifest.json",
            "checkpoints": base / "checkpoints",
            "train_manifest": base / "checkpoints" / "train_manifest.json",
            "memory": base / "memory.tam",
            "reports": base / "reports",
            "resolved_config": base / "resolved_config.json",
        }


@dataclass
class RunConfig:
    seed: int = 7
    paths: PathsConfig = field(default_factory=PathsConfig)
    data: DataConfig = field(default_factory=DataConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    tam: TamConfig = field(default_factory=TamConfig)
    replan: ReplanConfig = field(default_factory=ReplanConfig)
    decoder: DecoderTrainConfig = field(default_factory=DecoderTrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")


class ConfigError(Exception):
    pass


def _build(cls, data: dict):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        ftype = fields[name].type
        nested = _NESTED.get((cls, name))
        kwargs[name] = _build(nested, value) if nested else value
    return cls(**kwargs)


_NESTED = {
    (RunConfig, "paths"): PathsConfig,
    (RunConfig, "data"): DataConfig,
    (RunConfig, "sim"): SimConfig,
    (RunConfig, "tam"): TamConfig,
    (RunConfig, "replan"): ReplanConfig,
    (RunConfig, "decoder"): DecoderTrainConfig,
    (RunConfig, "eval"): EvalConfig,
    (EvalConfig, "attack"): AttackConfig,
}


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    config = _build(RunConfig, data)
    if isinstance(config.eval.attack, dict):  # pragma: no cover - defensive
        config.eval.attack = _build(AttackConfig, config.eval.attack)
    return config


def config_from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, data)
