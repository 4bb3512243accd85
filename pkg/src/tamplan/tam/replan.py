"""Sign-gradient replanning of a localized memory node.

When the goal associator says the current node no longer serves the goal,
its value embedding is nudged with iterated clipped sign-gradient steps
until the association score clears the threshold, then snapped to the
nearest real node so retrieved values stay dereferenceable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gradcore import Tape, Tensor, ops
from .memory import TamGraph, TamNode
from .networks import GoalAssociator


@dataclass
class ReplanConfig:
    step_size: float = 0.05
    threshold: float = 0.5
    max_trials: int = 10
    clip_low: float = -3.0
    clip_high: float = 3.0
    anchor_weight: float = 0.0   # optional pull toward the starting embedding

    def __post_init__(self):
        if not self.clip_low < self.clip_high:
            raise ValueError("clip bounds must satisfy low < high")
        if self.step_size <= 0:
            raise ValueError("step size must be positive")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        if self.max_trials < 0:
            raise ValueError("max trials must be non-negative")


@dataclass
class ReplanResult:
    node: TamNode | None
    trials: int
    succeeded: bool
    score: float
    eligible: np.ndarray | None = None   # nodes clearing the score threshold

    @property
    def failed(self) -> bool:
        return not self.succeeded


def sign_gradient_step(x: np.ndarray, grad: np.ndarray, step_size: float,
                       clip_low: float, clip_high: float) -> np.ndarray:
    """One iteration: x <- clip(x - step_size * sign(grad))."""
    return np.clip(x - step_size * np.sign(grad), clip_low, clip_high)


def snap_to_graph(graph: TamGraph, embedding: np.ndarray,
                  eligible: np.ndarray | None = None) -> TamNode | None:
    """Nearest real node by Euclidean distance in value space.

    `eligible` optionally masks candidates (nodes that satisfy the replan
    termination predicate); ties break to the lowest index.  Returns None
    when no candidate is eligible.
    """
    dists = np.linalg.norm(graph.values_assoc - embedding, axis=1)
    if eligible is not None:
        if not eligible.any():
            return None
        dists = np.where(eligible, dists, np.inf)
    return graph.node(int(np.argmin(dists)))


def replan(graph: TamGraph, assoc: GoalAssociator, node: TamNode, prev_node: TamNode,
           goal_id: int, config: ReplanConfig, loss_fn=None,
           score_fn=None, exclude=None) -> ReplanResult:
    """Iterated targeted perturbation of `node`'s value embedding.

    `score_fn(embedding) -> float` defaults to the goal-association
    probability against `prev_node`; `loss_fn(embedding_tensor) -> Tensor`
    defaults to BCE pushing that probability toward 1.  On success the
    modified embedding snaps to the nearest real node that itself clears
    the score threshold, so the returned node satisfies the loop's own
    termination predicate.  Exhaustion (or an empty candidate set) returns
    a failed result and the caller falls back to un-replanned retrieval.
    """
    prev_value = np.atleast_2d(prev_node.value_assoc)
    goal_ids = [int(goal_id)]

    if score_fn is None:
        def score_fn(embedding):
            return assoc.score(embedding, prev_node.value_assoc, goal_id)

        def batch_scores(values):
            return assoc.score_batch(values, prev_node.value_assoc, goal_id)
    else:
        def batch_scores(values):
            return np.array([float(score_fn(v)) for v in values])

    if loss_fn is None:
        target = Tensor(np.ones((1, 1)))

        def loss_fn(embedding_t):
            logits = assoc.logits(embedding_t, Tensor(prev_value), goal_ids)
            return ops.bce_with_logits(logits, target)

    current = node.value_assoc.astype(np.float64).copy()
    start = current.copy()
    score = float(score_fn(current))
    if score >= config.threshold:
        return ReplanResult(node=node, trials=0, succeeded=True, score=score)

    for trial in range(1, config.max_trials + 1):
        x = Tensor(np.atleast_2d(current), requires_grad=True)
        with Tape() as tape:
            loss = loss_fn(x)
            if config.anchor_weight > 0.0:
                drift = ops.add(x, Tensor(-np.atleast_2d(start)))
                penalty = ops.scale(ops.sum_all(ops.multiply(drift, drift)),
                                    config.anchor_weight)
                loss = ops.add(loss, penalty)
        tape.backward(loss)
        current = sign_gradient_step(current, x.grad.reshape(current.shape),
                                     config.step_size, config.clip_low,
                                     config.clip_high)
        score = float(score_fn(current))
        if score >= config.threshold:
            eligible = batch_scores(graph.values_assoc) >= config.threshold
            if exclude is not None and len(exclude):
                eligible[np.asarray(exclude)] = False
            snapped = snap_to_graph(graph, current, eligible)
            if snapped is None:
                return ReplanResult(node=None, trials=trial, succeeded=False,
                                    score=score)
            return ReplanResult(node=snapped, trials=trial, succeeded=True,
                                score=score, eligible=eligible)

    return ReplanResult(node=None, trials=config.max_trials, succeeded=False,
                        score=score)
