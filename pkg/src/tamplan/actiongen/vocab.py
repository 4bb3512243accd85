"""Token vocabulary over class-level actions.

Planning operates on class-level actions (GRAB plate, PUTBACK cup table);
grounding to a concrete object instance happens against the live state at
execution time.  The vocabulary is a fixed bijection derived from the
world's room/class capabilities, with STOP and PAD tokens appended.
"""

from __future__ import annotations

import numpy as np

from ..homesim import CLASS_SPECS, ROOM_VOCAB, Action
from ..homesim.actions import check_action
from ..homesim.world import (
    CLOSE,
    GRAB,
    OPEN,
    PUTBACK,
    PUTIN,
    STOP,
    SWITCHOFF,
    SWITCHON,
    WALK,
    action_class_signature,
)


def _enumerate_signatures() -> list[tuple]:
    grabbable = [c for c, s in CLASS_SPECS.items() if s.grabbable]
    surfaces = [c for c, s in CLASS_SPECS.items() if s.surface]
    containers = [c for c, s in CLASS_SPECS.items() if s.container]
    openable = [c for c, s in CLASS_SPECS.items() if s.openable]
    switchable = [c for c, s in CLASS_SPECS.items() if s.switchable]

    sigs: list[tuple] = [(WALK, room) for room in ROOM_VOCAB]
    sigs += [(GRAB, c) for c in grabbable]
    sigs += [(OPEN, c) for c in openable] + [(CLOSE, c) for c in openable]
    sigs += [(SWITCHON, c) for c in switchable] + [(SWITCHOFF, c) for c in switchable]
    sigs += [(PUTBACK, g, s) for g in grabbable for s in surfaces]
    sigs += [(PUTIN, g, c) for g in grabbable for c in containers]
    sigs.append((STOP,))
    return sigs


class ActionVocabulary:
    """Bijection between class-level action signatures and token ids."""

    def __init__(self):
        self.signatures = _enumerate_signatures()
        self.pad_id = len(self.signatures)
        self._to_id = {sig: i for i, sig in enumerate(self.signatures)}
        self.stop_id = self._to_id[(STOP,)]

    def __len__(self) -> int:
        return len(self.signatures) + 1  # PAD

    def encode_signature(self, signature: tuple) -> int:
        try:
            return self._to_id[signature]
        except KeyError:
            raise ValueError(f"signature {signature!r} not in vocabulary") from None

    def encode_action(self, action: Action) -> int:
        return self.encode_signature(action_class_signature(action))

    def decode(self, token_id: int) -> tuple:
        if token_id == self.pad_id:
            raise ValueError("PAD has no action signature")
        if not 0 <= token_id < len(self.signatures):
            raise ValueError(f"token id {token_id} out of range")
        return self.signatures[token_id]

    def encode_demo(self, demo) -> list[int]:
        """Token sequence of a demonstration, STOP appended."""
        return [self.encode_action(a) for _, a in demo.steps] + [self.stop_id]


def ground_signature(signature: tuple, state) -> Action | None:
    """Instantiate a class-level signature against a concrete state.

    Prefers the lowest-id candidate whose preconditions hold; falls back
    to the lowest-id candidate so the failure reason is still meaningful.
    Returns None when a referenced class has no instance at all.
    """
    verb = signature[0]
    if verb == STOP:
        return Action(STOP)
    if verb == WALK:
        return Action(WALK, (signature[1],))

    slots = []
    for cls in signature[1:]:
        ids = state.instances_of(cls)
        if not ids:
            return None
        slots.append(ids)

    fallback = None
    for combo in _combinations(slots):
        action = Action(verb, tuple(combo))
        if fallback is None:
            fallback = action
        if check_action(state, action) is None:
            return action
    return fallback


def _combinations(slots):
    if len(slots) == 1:
        for a in slots[0]:
            yield (a,)
    else:
        for a in slots[0]:
            for b in slots[1]:
                if a != b:
                    yield (a, b)
