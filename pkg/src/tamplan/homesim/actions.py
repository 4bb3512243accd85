"""Affordance-gated action semantics: one precondition table drives both
`executable_actions` and `execute`, which keeps the two provably aligned."""

from __future__ import annotations

from .world import (
    CLOSE,
    GRAB,
    INVENTORY_CAPACITY,
    OPEN,
    PUTBACK,
    PUTIN,
    STOP,
    SWITCHOFF,
    SWITCHON,
    WALK,
    Action,
    EnvironmentState,
)


class NotExecutable(Exception):
    """Raised when an action's precondition fails; `.reason` names it."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def check_action(state: EnvironmentState, action: Action) -> str | None:
    """Return None if executable, else the name of the failed precondition."""
    verb, args = action.verb, action.args
    if verb == STOP:
        return "stop_token"
    if verb == WALK:
        return None if args[0] in state.rooms else "no_such_room"

    oid = args[0]
    if oid not in state.objects:
        return "no_such_object"
    obj = state.objects[oid]

    if verb == GRAB:
        if not obj.spec.grabbable:
            return "not_grabbable"
        if not state.is_visible(oid):
            return "not_visible"
        if len(state.inventory) >= INVENTORY_CAPACITY:
            return "hands_full"
        return None

    if verb in (PUTBACK, PUTIN):
        if oid not in state.inventory:
            return "not_holding"
        tid = args[1]
        if tid not in state.objects:
            return "no_such_object"
        target = state.objects[tid]
        if not state.is_visible(tid):
            return "target_not_visible"
        if verb == PUTBACK:
            return None if target.spec.surface else "not_a_surface"
        if not target.spec.container:
            return "not_a_container"
        if target.spec.openable and target.states.get("door") == "closed":
            return "container_closed"
        return None

    if verb in (OPEN, CLOSE):
        if not obj.spec.openable:
            return "not_openable"
        if not state.is_visible(oid):
            return "not_visible"
        want = "closed" if verb == OPEN else "open"
        return None if obj.states.get("door") == want else f"already_{verb.lower()}"

    if verb in (SWITCHON, SWITCHOFF):
        if not obj.spec.switchable:
            return "not_switchable"
        if not state.is_visible(oid):
            return "not_visible"
        want = "off" if verb == SWITCHON else "on"
        return None if obj.states.get("power") == want else "wrong_power_state"

    return "unknown_verb"  # pragma: no cover - Action validates verbs


def apply_action(state: EnvironmentState, action: Action) -> EnvironmentState:
    """Apply effects to a copy of `state`; raises NotExecutable on failure."""
    reason = check_action(state, action)
    if reason is not None:
        raise NotExecutable(reason)

    new = state.copy()
    verb, args = action.verb, action.args

    if verb == WALK:
        new.agent_room = args[0]
        return new

    obj = new.objects[args[0]]
    if verb == GRAB:
        new.relations = {r for r in new.relations if r[0] != obj.oid}
        obj.room = None
        obj.held = True
        new.inventory.append(obj.oid)
    elif verb in (PUTBACK, PUTIN):
        target = new.objects[args[1]]
        obj.held = False
        obj.room = new.agent_room
        new.inventory.remove(obj.oid)
        rel = "on" if verb == PUTBACK else "inside"
        new.relations.add((obj.oid, rel, target.oid))
        # a sponge set down on a washable surface scrubs it clean
        if verb == PUTBACK and obj.cls == "sponge" and target.spec.washable:
            target.states["dirt"] = "clean"
    elif verb == OPEN:
        obj.states["door"] = "open"
    elif verb == CLOSE:
        obj.states["door"] = "closed"
    elif verb == SWITCHON:
        obj.states["power"] = "on"
        # running the sink faucet washes whatever sits inside it
        if obj.cls == "sink":
            for subj, rel, targ in new.relations:
                if rel == "inside" and targ == obj.oid:
                    inner = new.objects[subj]
                    if inner.spec.washable:
                        inner.states["dirt"] = "clean"
    elif verb == SWITCHOFF:
        obj.states["power"] = "off"
    return new


def executable_actions(state: EnvironmentState) -> list[Action]:
    """Every concrete action whose preconditions hold, WALKs included."""
    result = [Action(WALK, (room,)) for room in state.rooms]
    visible = state.visible_objects()
    for oid in visible:
        spec = state.objects[oid].spec
        candidates = []
        if spec.grabbable:
            candidates.append(Action(GRAB, (oid,)))
        if spec.openable:
            candidates.extend([Action(OPEN, (oid,)), Action(CLOSE, (oid,))])
        if spec.switchable:
            candidates.extend([Action(SWITCHON, (oid,)), Action(SWITCHOFF, (oid,))])
        result.extend(a for a in candidates if check_action(state, a) is None)
    for held in state.inventory:
        for tid in visible:
            for verb in (PUTBACK, PUTIN):
                action = Action(verb, (held, tid))
                if check_action(state, action) is None:
                    result.append(action)
    return result
