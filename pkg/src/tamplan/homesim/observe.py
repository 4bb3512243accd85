"""Partial egocentric observations as noisy multi-hot feature vectors.

A feature vector encodes what the agent can currently see: its room, the
classes of visible objects, the discrete states of those objects, and
what it is holding.  One vector is rendered for the state before an
action and one for the state after, forming the stacked observation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .world import CLASS_VOCAB, ROOM_VOCAB, STATE_VALUES, EnvironmentState

FEATURE_DIM = len(ROOM_VOCAB) + len(CLASS_VOCAB) * (2 + len(STATE_VALUES))


@dataclass
class Observation:
    """Stacked start/end features of one action; ids kept for debugging only."""

    start_features: np.ndarray
    end_features: np.ndarray
    visible_objects: tuple = ()


def encode_state(state: EnvironmentState) -> np.ndarray:
    """Noiseless multi-hot encoding; deterministic function of the state."""
    n_rooms, n_classes = len(ROOM_VOCAB), len(CLASS_VOCAB)
    vec = np.zeros(FEATURE_DIM)
    vec[ROOM_VOCAB.index(state.agent_room)] = 1.0

    class_base = n_rooms
    state_base = n_rooms + n_classes
    inv_base = state_base + n_classes * len(STATE_VALUES)
    for oid in state.visible_objects():
        obj = state.objects[oid]
        ci = CLASS_VOCAB.index(obj.cls)
        vec[class_base + ci] = 1.0
        for value in obj.states.values():
            vec[state_base + ci * len(STATE_VALUES) + STATE_VALUES.index(value)] = 1.0
    for oid in state.inventory:
        vec[inv_base + CLASS_VOCAB.index(state.objects[oid].cls)] = 1.0
    return vec


def render_features(state: EnvironmentState, rng: np.random.Generator | None,
                    sigma: float) -> np.ndarray:
    vec = encode_state(state)
    if sigma > 0.0:
        if rng is None:
            raise ValueError("noise requested but no rng supplied")
        vec = vec + rng.normal(0.0, sigma, size=vec.shape)
    return vec


def render_observation(state_before: EnvironmentState,
                       state_after: EnvironmentState,
                       rng: np.random.Generator | None = None,
                       sigma: float = 0.0) -> Observation:
    return Observation(
        start_features=render_features(state_before, rng, sigma),
        end_features=render_features(state_after, rng, sigma),
        visible_objects=tuple(state_after.visible_objects()),
    )
