"""The memory graph: one node per demonstration step.

Node keys are localization-branch embeddings of the step's end frame;
node values are the affordance projection and the encoder value used by
the goal associator.  Raw end-frame features ride along to support the
cosine-on-raw-features localization ablation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gradcore import load_arrays, save_arrays
from ..homesim import Action, Demonstration
from ..homesim.world import action_class_signature
from .networks import AffordanceEncoder, LocalizationNet


class ProvenanceError(Exception):
    """Artifacts built from different dataset/checkpoint lineages."""


@dataclass(frozen=True)
class TamNode:
    index: int
    key: np.ndarray
    value_affordance: np.ndarray
    value_assoc: np.ndarray
    raw_end: np.ndarray
    action: Action
    goal_id: int
    episode_id: int
    step_index: int


class TamGraph:
    def __init__(self, keys, values_z, values_assoc, raw_end, labels,
                 provenance: dict):
        self.keys = keys
        self.values_z = values_z
        self.values_assoc = values_assoc
        self.raw_end = raw_end
        self.labels = labels           # list of dicts, one per node
        self.provenance = dict(provenance)
        self.goal_index: dict[int, np.ndarray] = {}
        self.action_index: dict[tuple, np.ndarray] = {}
        self.episode_index: dict[int, np.ndarray] = {}
        self._build_indices()

    def _build_indices(self):
        by_goal: dict[int, list[int]] = {}
        by_action: dict[tuple, list[int]] = {}
        by_episode: dict[int, list[int]] = {}
        for i, lab in enumerate(self.labels):
            by_goal.setdefault(lab["goal_id"], []).append(i)
            by_episode.setdefault(lab["episode_id"], []).append(i)
            sig = action_class_signature(Action(lab["verb"], tuple(lab["args"])))
            by_action.setdefault(sig, []).append(i)
        self.goal_index = {g: np.array(ix) for g, ix in by_goal.items()}
        self.action_index = {s: np.array(ix) for s, ix in by_action.items()}
        self.episode_index = {e: np.array(ix) for e, ix in by_episode.items()}

    def __len__(self) -> int:
        return self.keys.shape[0]

    def node(self, i: int) -> TamNode:
        lab = self.labels[i]
        return TamNode(
            index=i, key=self.keys[i], value_affordance=self.values_z[i],
            value_assoc=self.values_assoc[i], raw_end=self.raw_end[i],
            action=Action(lab["verb"], tuple(lab["args"])),
            goal_id=lab["goal_id"], episode_id=lab["episode_id"],
            step_index=lab["step_index"],
        )

    def save(self, path) -> None:
        arrays = {"keys": self.keys, "values_z": self.values_z,
                  "values_assoc": self.values_assoc, "raw_end": self.raw_end}
        meta = {"kind": "tam_graph", "n_nodes": len(self),
                "key_dim": int(self.keys.shape[1]),
                "value_dim": int(self.values_z.shape[1]),
                "labels": self.labels, "provenance": self.provenance}
        save_arrays(path, arrays, meta)

    @classmethod
    def load(cls, path) -> "TamGraph":
        arrays, meta = load_arrays(path)
        if meta.get("kind") != "tam_graph":
            raise ProvenanceError(f"{path} is not a memory file")
        return cls(arrays["keys"], arrays["values_z"], arrays["values_assoc"],
                   arrays["raw_end"], meta["labels"], meta["provenance"])


def build_memory(demos: list[Demonstration], encoder: AffordanceEncoder,
                 localizer: LocalizationNet, dataset_hash: str | None = None,
                 checkpoint_hashes: dict | None = None) -> TamGraph:
    """Encode every demonstration step into a node; deterministic."""
    for net in (encoder, localizer):
        trained_on = net.meta.get("dataset_hash")
        if dataset_hash is not None and trained_on is not None \
                and trained_on != dataset_hash:
            raise ProvenanceError(
                f"network trained on {trained_on[:12]} but memory requested "
                f"for dataset {dataset_hash[:12]}"
            )
    if not demos:
        raise ValueError("cannot build memory from zero demonstrations")

    stacked, raw_end, labels = [], [], []
    for demo in demos:
        for step_index, (obs, action) in enumerate(demo.steps):
            stacked.append(np.concatenate([obs.start_features, obs.end_features]))
            raw_end.append(obs.end_features)
            labels.append({
                "verb": action.verb, "args": list(action.args),
                "goal_id": demo.goal.id, "episode_id": demo.episode_id,
                "step_index": step_index,
            })
    stacked = np.array(stacked)
    raw_end = np.array(raw_end)
    values_assoc, values_z = encoder.embed_numpy(stacked)
    keys = localizer.embed_numpy(raw_end)
    provenance = {"dataset_hash": dataset_hash,
                  "checkpoint_hashes": checkpoint_hashes or {}}
    return TamGraph(keys, values_z, values_assoc, raw_end, labels, provenance)
