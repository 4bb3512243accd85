"""The eight household task templates and their flawless expert policies.

A template turns a concrete apartment plus spawn location into the action
sequence an expert would take.  Steps that are already satisfied (the tv
is on, the agent spawned next to the plate) are simply not emitted, so
the same goal produces different expert programs in different situations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .actions import apply_action, check_action
from .world import (
    CLOSE,
    GRAB,
    OPEN,
    PUTBACK,
    PUTIN,
    SWITCHOFF,
    SWITCHON,
    WALK,
    Action,
    EnvironmentState,
)


class TemplateUnsatisfiable(Exception):
    pass


@dataclass(frozen=True)
class Goal:
    id: int
    text: str


class _Expert:
    """Executes a task macro against a private copy of the state, emitting
    only actions whose preconditions hold at emission time."""

    def __init__(self, state: EnvironmentState):
        self.state = state.copy()
        self.actions: list[Action] = []

    def do(self, action: Action):
        reason = check_action(self.state, action)
        if reason is not None:
            raise TemplateUnsatisfiable(f"{action}: {reason}")
        self.state = apply_action(self.state, action)
        self.actions.append(action)

    def goto(self, room: str):
        if self.state.agent_room != room:
            self.do(Action(WALK, (room,)))

    def first(self, cls: str) -> str:
        ids = self.state.instances_of(cls)
        if not ids:
            raise TemplateUnsatisfiable(f"no instance of {cls}")
        return ids[0]

    def room_of(self, oid: str) -> str:
        room = self.state.objects[oid].room
        if room is None:
            raise TemplateUnsatisfiable(f"{oid} is held, cannot locate")
        return room

    def fetch(self, oid: str):
        """Walk to an object, open whatever hides it, and grab it."""
        self.goto(self.room_of(oid))
        container = self.state.container_of(oid)
        if container is not None:
            holder = self.state.objects[container]
            if holder.spec.openable and holder.states.get("door") == "closed":
                self.do(Action(OPEN, (container,)))
        self.do(Action(GRAB, (oid,)))

    def switch(self, oid: str, on: bool):
        want = "off" if on else "on"
        if self.state.objects[oid].states.get("power") == want:
            self.do(Action(SWITCHON if on else SWITCHOFF, (oid,)))

    def lamp_in(self, room: str) -> str | None:
        lamps = [o for o in self.state.instances_of("lamp")
                 if self.state.objects[o].room == room]
        return lamps[0] if lamps else None


def _set_up_table(x: _Expert):
    plate, cup, table = x.first("plate"), x.first("cup"), x.first("table")
    x.fetch(plate)
    if x.state.objects[cup].room == x.state.agent_room and x.state.is_visible(cup):
        x.do(Action(GRAB, (cup,)))
        x.goto(x.room_of(table))
        x.do(Action(PUTBACK, (plate, table)))
        x.do(Action(PUTBACK, (cup, table)))
    else:
        x.goto(x.room_of(table))
        x.do(Action(PUTBACK, (plate, table)))
        x.fetch(cup)
        x.goto(x.room_of(table))
        x.do(Action(PUTBACK, (cup, table)))


def _make_coffee(x: _Expert):
    cup, maker = x.first("cup"), x.first("coffeemaker")
    x.fetch(cup)
    x.goto(x.room_of(maker))
    x.do(Action(PUTIN, (cup, maker)))
    x.switch(maker, on=True)


def _watch_tv(x: _Expert):
    tv, remote, sofa = x.first("tv"), x.first("remote"), x.first("sofa")
    x.goto(x.room_of(tv))
    x.fetch(remote)
    x.switch(tv, on=True)
    x.do(Action(PUTBACK, (remote, sofa)))
    lamp = x.lamp_in(x.state.agent_room)
    if lamp and x.state.objects[lamp].states.get("power") == "on":
        x.switch(lamp, on=False)


def _write_email(x: _Expert):
    computer, desk, book = x.first("computer"), x.first("desk"), x.first("book")
    x.fetch(book)
    x.goto(x.room_of(computer))
    x.switch(computer, on=True)
    lamp = x.lamp_in(x.state.agent_room)
    if lamp:
        x.switch(lamp, on=True)
    x.do(Action(PUTBACK, (book, desk)))


def _wash_plate(x: _Expert):
    plate, sink, counter = x.first("plate"), x.first("sink"), x.first("counter")
    x.fetch(plate)
    x.goto(x.room_of(sink))
    x.do(Action(PUTIN, (plate, sink)))
    x.switch(sink, on=True)
    x.switch(sink, on=False)
    x.do(Action(GRAB, (plate,)))
    x.do(Action(PUTBACK, (plate, counter)))


def _store_groceries(x: _Expert):
    groceries, fridge = x.first("groceries"), x.first("fridge")
    x.fetch(groceries)
    x.goto(x.room_of(fridge))
    if x.state.objects[fridge].states.get("door") == "closed":
        x.do(Action(OPEN, (fridge,)))
    x.do(Action(PUTIN, (groceries, fridge)))
    x.do(Action(CLOSE, (fridge,)))


def _read_book(x: _Expert):
    book, sofa = x.first("book"), x.first("sofa")
    x.fetch(book)
    x.goto(x.room_of(sofa))
    lamp = x.lamp_in(x.state.agent_room)
    if lamp:
        x.switch(lamp, on=True)
    x.do(Action(PUTBACK, (book, sofa)))


def _clean_kitchen(x: _Expert):
    sponge, counter = x.first("sponge"), x.first("counter")
    x.fetch(sponge)
    x.do(Action(PUTBACK, (sponge, counter)))
    for cls in ("fridge", "cabinet"):
        for oid in x.state.instances_of(cls):
            if x.state.objects[oid].room == x.state.agent_room and \
                    x.state.objects[oid].states.get("door") == "open":
                x.do(Action(CLOSE, (oid,)))
    maker = x.first("coffeemaker")
    if x.state.objects[maker].room == x.state.agent_room and \
            x.state.objects[maker].states.get("power") == "on":
        x.switch(maker, on=False)


@dataclass(frozen=True)
class TaskTemplate:
    goal: Goal
    build: callable

    def expert_actions(self, state: EnvironmentState) -> list[Action]:
        x = _Expert(state)
        self.build(x)
        return x.actions


TASK_TEMPLATES = [
    TaskTemplate(Goal(0, "set up table"), _set_up_table),
    TaskTemplate(Goal(1, "make coffee"), _make_coffee),
    TaskTemplate(Goal(2, "watch tv"), _watch_tv),
    TaskTemplate(Goal(3, "write email"), _write_email),
    TaskTemplate(Goal(4, "wash plate"), _wash_plate),
    TaskTemplate(Goal(5, "store groceries"), _store_groceries),
    TaskTemplate(Goal(6, "read book"), _read_book),
    TaskTemplate(Goal(7, "clean kitchen"), _clean_kitchen),
]

GOAL_VOCAB = [t.goal for t in TASK_TEMPLATES]
