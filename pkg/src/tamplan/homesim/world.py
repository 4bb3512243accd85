"""Scene-graph state, object capabilities, and the high-level action alphabet.

The world is symbolic: rooms hold objects, objects carry discrete states
(door open/closed, power on/off, dirt clean/dirty), and relations tie
objects to the surfaces and containers they rest on or in.  The agent has
a current room and two hands.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

ROOM_VOCAB = [
    "kitchen", "living_room", "bathroom", "bedroom",
    "dining_room", "office", "hallway", "pantry",
]
CORE_ROOMS = ["kitchen", "living_room", "bathroom", "bedroom"]
SPAWN_ROOMS = list(CORE_ROOMS)

INVENTORY_CAPACITY = 2


@dataclass(frozen=True)
class ClassSpec:
    grabbable: bool = False
    surface: bool = False
    container: bool = False
    openable: bool = False
    switchable: bool = False
    washable: bool = False


CLASS_SPECS: dict[str, ClassSpec] = {
    "plate": ClassSpec(grabbable=True, washable=True),
    "cup": ClassSpec(grabbable=True, washable=True),
    "book": ClassSpec(grabbable=True),
    "groceries": ClassSpec(grabbable=True),
    "sponge": ClassSpec(grabbable=True),
    "remote": ClassSpec(grabbable=True),
    "table": ClassSpec(surface=True, washable=True),
    "desk": ClassSpec(surface=True),
    "counter": ClassSpec(surface=True, washable=True),
    "shelf": ClassSpec(surface=True),
    "sofa": ClassSpec(surface=True),
    "bed": ClassSpec(surface=True),
    "tv": ClassSpec(switchable=True),
    "computer": ClassSpec(switchable=True),
    "coffeemaker": ClassSpec(switchable=True, container=True),
    "lamp": ClassSpec(switchable=True),
    "fridge": ClassSpec(openable=True, container=True),
    "cabinet": ClassSpec(openable=True, container=True),
    "sink": ClassSpec(switchable=True, container=True),
}

CLASS_VOCAB = list(CLASS_SPECS)

# one value per dimension an object's class supports
STATE_DIMENSIONS = {"door": ("open", "closed"), "power": ("on", "off"),
                    "dirt": ("clean", "dirty")}
STATE_VALUES = ["open", "closed", "on", "off", "clean", "dirty"]

WALK, GRAB, PUTBACK, OPEN, CLOSE, SWITCHON, SWITCHOFF, PUTIN, STOP = (
    "WALK", "GRAB", "PUTBACK", "OPEN", "CLOSE", "SWITCHON", "SWITCHOFF",
    "PUTIN", "STOP",
)
VERB_ARITY = {WALK: 1, GRAB: 1, PUTBACK: 2, OPEN: 1, CLOSE: 1,
              SWITCHON: 1, SWITCHOFF: 1, PUTIN: 2, STOP: 0}


@dataclass(frozen=True)
class Action:
    """A grounded high-level action: verb plus room/object-id arguments."""

    verb: str
    args: tuple = ()

    def __post_init__(self):
        if self.verb not in VERB_ARITY:
            raise ValueError(f"unknown verb {self.verb!r}")
        if len(self.args) != VERB_ARITY[self.verb]:
            raise ValueError(
                f"{self.verb} takes {VERB_ARITY[self.verb]} args, got {self.args!r}"
            )

    def __str__(self):
        return f"[{self.verb}] {' '.join(self.args)}".strip()


STOP_ACTION = Action(STOP)


def action_class_signature(action: Action) -> tuple:
    """Class-level form of a grounded action: object ids drop their instance
    suffix, room arguments stay as-is.  Two GRABs of different plates in
    different apartments share a signature."""
    if action.verb in (WALK, STOP):
        return (action.verb,) + tuple(action.args)
    return (action.verb,) + tuple(arg.rsplit("_", 1)[0] for arg in action.args)


@dataclass
class WorldObject:
    oid: str
    cls: str
    room: str | None               # None while held
    states: dict[str, str] = field(default_factory=dict)
    held: bool = False

    @property
    def spec(self) -> ClassSpec:
        return CLASS_SPECS[self.cls]


@dataclass
class EnvironmentState:
    """Ground-truth scene graph: rooms, objects, relations, agent."""

    rooms: list[str]
    objects: dict[str, WorldObject]
    relations: set[tuple]          # (subject_id, relation, target_id)
    agent_room: str
    inventory: list[str] = field(default_factory=list)

    def copy(self) -> "EnvironmentState":
        return EnvironmentState(
            rooms=list(self.rooms),
            objects={k: copy.deepcopy(v) for k, v in self.objects.items()},
            relations=set(self.relations),
            agent_room=self.agent_room,
            inventory=list(self.inventory),
        )

    def container_of(self, oid: str) -> str | None:
        for subj, rel, targ in self.relations:
            if subj == oid and rel == "inside":
                return targ
        return None

    def is_visible(self, oid: str) -> bool:
        """In the agent's room and not shut inside a closed container."""
        obj = self.objects[oid]
        if obj.held or obj.room != self.agent_room:
            return False
        container = self.container_of(oid)
        if container is not None:
            holder = self.objects[container]
            if holder.spec.openable and holder.states.get("door") == "closed":
                return False
        return True

    def visible_objects(self) -> list[str]:
        return sorted(oid for oid in self.objects if self.is_visible(oid))

    def instances_of(self, cls: str) -> list[str]:
        return sorted(o.oid for o in self.objects.values() if o.cls == cls)

    def check_invariants(self) -> None:
        assert self.agent_room in self.rooms
        assert len(self.inventory) <= INVENTORY_CAPACITY
        for obj in self.objects.values():
            in_room = obj.room is not None
            in_hand = obj.held
            assert in_room != in_hand, f"{obj.oid} must be in a room xor held"
            assert in_hand == (obj.oid in self.inventory)
            if in_room:
                assert obj.room in self.rooms
        for subj, rel, targ in self.relations:
            assert subj in self.objects and targ in self.objects, (subj, rel, targ)
            assert rel in ("on", "inside", "near")
