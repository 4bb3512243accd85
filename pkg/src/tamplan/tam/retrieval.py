"""Localization against memory keys and k-nearest retrieval."""

from __future__ import annotations

import warnings

import numpy as np

from .memory import TamGraph, TamNode
from .networks import GoalAssociator, LocalizationNet


class LearnedLocalizer:
    """Scores the current frame against node keys with the trained siamese net."""

    def __init__(self, net: LocalizationNet):
        self.net = net

    def query_embedding(self, frame_features: np.ndarray) -> np.ndarray:
        return self.net.embed_numpy(frame_features)[0]

    def scores(self, graph: TamGraph, frame_features: np.ndarray) -> np.ndarray:
        return self.net.score_keys(self.query_embedding(frame_features), graph.keys)

    def scores_for_key(self, graph: TamGraph, key: np.ndarray) -> np.ndarray:
        return self.net.score_keys(key, graph.keys)

    def node_query(self, node: TamNode) -> np.ndarray:
        return node.key


class RawFeatureLocalizer:
    """Ablation: cosine similarity on raw end-frame features, no learning."""

    def query_embedding(self, frame_features: np.ndarray) -> np.ndarray:
        return np.asarray(frame_features)

    def scores(self, graph: TamGraph, frame_features: np.ndarray) -> np.ndarray:
        q = np.asarray(frame_features)
        norms = np.linalg.norm(graph.raw_end, axis=1) * (np.linalg.norm(q) + 1e-12)
        return graph.raw_end @ q / (norms + 1e-12)

    def scores_for_key(self, graph: TamGraph, key: np.ndarray) -> np.ndarray:
        return self.scores(graph, key)

    def node_query(self, node: TamNode) -> np.ndarray:
        return node.raw_end


def _ranked(scores: np.ndarray) -> np.ndarray:
    # stable sort on negated scores: ties resolve to the lowest node index
    return np.argsort(-scores, kind="stable")


def _masked(scores: np.ndarray, exclude) -> np.ndarray:
    if exclude is None or len(exclude) == 0:
        return scores
    scores = scores.copy()
    scores[np.asarray(exclude)] = -np.inf
    return scores


def localize(graph: TamGraph, localizer, frame_features: np.ndarray,
             exclude=None) -> TamNode:
    """The node whose key the localizer scores highest; ties -> lowest index."""
    if len(graph) == 0:
        raise ValueError("cannot localize in an empty graph")
    scores = _masked(localizer.scores(graph, frame_features), exclude)
    return graph.node(int(_ranked(scores)[0]))


def retrieve_k_nearest(graph: TamGraph, localizer, frame_features: np.ndarray,
                       k: int, exclude=None) -> list[TamNode]:
    """Top-k nodes by localization score, descending; element 0 == localize."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(graph):
        warnings.warn(f"k={k} exceeds graph size {len(graph)}; returning all nodes")
        k = len(graph)
    scores = _masked(localizer.scores(graph, frame_features), exclude)
    return [graph.node(int(i)) for i in _ranked(scores)[:k]]


def retrieve_k_nearest_to_node(graph: TamGraph, localizer, node: TamNode,
                               k: int, exclude=None) -> list[TamNode]:
    """Neighborhood of an existing node in key space (used after a replan)."""
    k = min(k, len(graph))
    scores = _masked(localizer.scores_for_key(graph, localizer.node_query(node)),
                     exclude)
    return [graph.node(int(i)) for i in _ranked(scores)[:k]]


def goal_association_score(assoc: GoalAssociator, node_a: TamNode, node_b: TamNode,
                           goal_id: int) -> float:
    """P(both nodes pursue `goal_id`); deterministic in (weights, inputs)."""
    return assoc.score(node_a.value_assoc, node_b.value_assoc, goal_id)
