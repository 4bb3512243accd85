"""The per-step memory pipeline: localize, goal-check, replan, retrieve.

This is the single retrieval path shared by teacher-forced decoder
training and closed-loop planning, so the memory content the decoder
learns to read is distributed exactly like the content it sees when
acting.  An `exclude` mask drops nodes (the query's own episode during
training) from localization, snapping, and retrieval alike.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .memory import TamGraph, TamNode
from .networks import GoalAssociator
from .replan import ReplanConfig, replan
from .retrieval import (
    goal_association_score,
    localize,
    retrieve_k_nearest,
    retrieve_k_nearest_to_node,
)


@dataclass
class RetrievalStep:
    node: TamNode                  # localized (possibly replanned) node
    retrieved: list[TamNode]       # k nearest, cross-attention slots
    replan_trials: int = 0
    replanned: bool = False


@dataclass
class MemoryRetriever:
    memory: TamGraph
    localizer: object
    assoc: GoalAssociator | None = None
    k: int = 5
    use_replan: bool = True
    replan_config: ReplanConfig = field(default_factory=ReplanConfig)

    def step(self, frame_features: np.ndarray, prev_node: TamNode | None,
             goal_id: int, exclude=None) -> RetrievalStep:
        node = localize(self.memory, self.localizer, frame_features, exclude)
        trials = 0
        moved = False
        eligible = None
        if prev_node is not None and self.use_replan and self.assoc is not None:
            score = goal_association_score(self.assoc, node, prev_node, goal_id)
            if score < self.replan_config.threshold:
                result = replan(self.memory, self.assoc, node, prev_node, goal_id,
                                self.replan_config, exclude=exclude)
                trials = result.trials
                if result.succeeded and result.node.index != node.index:
                    node = result.node
                    moved = True
                    eligible = result.eligible
        k = min(self.k, len(self.memory))
        if moved:
            # keep the whole retrieved set on the goal-consistent manifold the
            # optimization just reached, not merely its single nearest node
            drop = None
            if eligible is not None:
                drop = np.flatnonzero(~eligible)
                k = min(k, len(self.memory) - len(drop))
            retrieved = retrieve_k_nearest_to_node(self.memory, self.localizer,
                                                   node, k, drop)
        else:
            retrieved = retrieve_k_nearest(self.memory, self.localizer,
                                           frame_features, k, exclude)
        return RetrievalStep(node=node, retrieved=retrieved, replan_trials=trials,
                             replanned=moved)
