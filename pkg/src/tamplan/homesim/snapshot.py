"""Canonical fact sets over the scene graph, the basis of the F1 metrics."""

from __future__ import annotations

from .world import EnvironmentState

STATE_FACT = "state"
RELATION_FACT = "rel"


def graph_snapshot(state: EnvironmentState) -> list[tuple]:
    """Sorted, canonical facts describing the environment.

    Object-state facts are ``(state, oid, value)``; a held object reports
    ``(state, oid, held)``.  Relation facts are ``(rel, subj, relation,
    targ)`` and include room membership as an ``inside`` relation.  The
    agent's own pose is deliberately excluded.
    """
    facts: set[tuple] = set()
    for obj in state.objects.values():
        for value in obj.states.values():
            facts.add((STATE_FACT, obj.oid, value))
        if obj.held:
            facts.add((STATE_FACT, obj.oid, "held"))
        else:
            facts.add((RELATION_FACT, obj.oid, "inside", obj.room))
    for subj, rel, targ in state.relations:
        facts.add((RELATION_FACT, subj, rel, targ))
    return sorted(facts)
