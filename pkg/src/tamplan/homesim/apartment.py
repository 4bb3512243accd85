"""Seeded apartment generation.

Every apartment carries the furniture and props the eight household tasks
need; layout, extra rooms, object placement, and initial object states
vary with the seed so that expert solutions differ across apartments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .world import CORE_ROOMS, EnvironmentState, WorldObject


@dataclass
class SimConfig:
    extra_room_pool: list[str] = field(default_factory=lambda: ["dining_room", "office"])
    min_extra_rooms: int = 0
    max_extra_rooms: int = 2
    extra_plate_prob: float = 0.4
    extra_cup_prob: float = 0.4
    door_open_prob: float = 0.4
    tv_on_prob: float = 0.35
    lamp_on_prob: float = 0.5
    computer_on_prob: float = 0.3
    coffeemaker_on_prob: float = 0.25
    dish_dirty_prob: float = 0.5
    counter_dirty_prob: float = 0.6
    table_dirty_prob: float = 0.3
    noise_sigma: float = 0.05

    def validate(self) -> None:
        if self.min_extra_rooms < 0 or self.max_extra_rooms < self.min_extra_rooms:
            raise ValueError("extra room range is ill-formed")
        if self.max_extra_rooms > len(self.extra_room_pool):
            raise ValueError("extra room range exceeds the room pool")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be non-negative")
        if not CORE_ROOMS:
            raise ValueError("at least one room is required")


class _Builder:
    def __init__(self):
        self.objects: dict[str, WorldObject] = {}
        self.relations: set[tuple] = set()
        self._counts: dict[str, int] = {}

    def add(self, cls: str, room: str, on: str | None = None,
            inside: str | None = None, **states) -> str:
        n = self._counts.get(cls, 0)
        self._counts[cls] = n + 1
        oid = f"{cls}_{n}"
        self.objects[oid] = WorldObject(oid=oid, cls=cls, room=room, states=dict(states))
        if on is not None:
            self.relations.add((oid, "on", on))
        if inside is not None:
            self.relations.add((oid, "inside", inside))
        return oid


def generate_apartment(seed: int, config: SimConfig | None = None) -> EnvironmentState:
    """Deterministic apartment for a seed; same seed, same state."""
    config = config or SimConfig()
    config.validate()
    rng = np.random.default_rng(seed)
    b = _Builder()

    n_extra = int(rng.integers(config.min_extra_rooms, config.max_extra_rooms + 1))
    extras = sorted(rng.choice(config.extra_room_pool, size=n_extra, replace=False).tolist()) \
        if n_extra else []
    rooms = CORE_ROOMS + extras

    def door():
        return "open" if rng.random() < config.door_open_prob else "closed"

    def power(p_on):
        return "on" if rng.random() < p_on else "off"

    def dirt(p_dirty):
        return "dirty" if rng.random() < p_dirty else "clean"

    # fixed kitchen block
    counter = b.add("counter", "kitchen", dirt=dirt(config.counter_dirty_prob))
    sink = b.add("sink", "kitchen", power="off")
    fridge = b.add("fridge", "kitchen", door=door())
    cabinet = b.add("cabinet", "kitchen", door=door())
    b.add("coffeemaker", "kitchen", on=counter, power=power(config.coffeemaker_on_prob))

    # fixed living room block
    sofa = b.add("sofa", "living_room")
    b.add("tv", "living_room", power=power(config.tv_on_prob))
    shelf = b.add("shelf", "living_room")
    b.add("lamp", "living_room", power=power(config.lamp_on_prob))
    b.add("remote", "living_room", on=sofa)

    bed = b.add("bed", "bedroom")
    b.add("lamp", "bedroom", power=power(config.lamp_on_prob))
    b.add("cabinet", "bathroom", door=door())

    table_room = "dining_room" if "dining_room" in rooms else \
        str(rng.choice(["kitchen", "living_room"]))
    table = b.add("table", table_room, dirt=dirt(config.table_dirty_prob))

    desk_room = "office" if "office" in rooms else \
        str(rng.choice(["bedroom", "living_room"]))
    desk = b.add("desk", desk_room)
    b.add("computer", desk_room, on=desk, power=power(config.computer_on_prob))
    if desk_room == "office":
        b.add("lamp", "office", power=power(config.lamp_on_prob))

    book_spots = [("living_room", shelf), ("bedroom", bed), (desk_room, desk),
                  ("living_room", sofa), (table_room, table)]
    book_room, book_surface = book_spots[int(rng.integers(len(book_spots)))]
    b.add("book", book_room, on=book_surface)

    dish_spots = [("kitchen", "on", counter), ("kitchen", "inside", cabinet),
                  (table_room, "on", table), ("living_room", "on", shelf),
                  (desk_room, "on", desk)]

    def place_dish(cls):
        room, how, anchor = dish_spots[int(rng.integers(len(dish_spots)))]
        kw = {how: anchor}
        b.add(cls, room, dirt=dirt(config.dish_dirty_prob), **kw)

    place_dish("plate")
    place_dish("cup")
    if rng.random() < config.extra_plate_prob:
        place_dish("plate")
    if rng.random() < config.extra_cup_prob:
        place_dish("cup")

    groceries_spots = [("kitchen", "on", counter), (table_room, "on", table),
                       ("bedroom", "on", bed), (desk_room, "on", desk)]
    room, how, anchor = groceries_spots[int(rng.integers(len(groceries_spots)))]
    b.add("groceries", room, **{how: anchor})
    sponge_spots = [("on", counter), ("inside", sink), ("inside", cabinet)]
    how, anchor = sponge_spots[int(rng.integers(len(sponge_spots)))]
    b.add("sponge", "kitchen", **{how: anchor})

    b.relations.add(("sofa_0", "near", "tv_0"))
    b.relations.add(("computer_0", "near", "desk_0"))

    state = EnvironmentState(rooms=rooms, objects=b.objects, relations=b.relations,
                             agent_room="kitchen")
    state.check_invariants()
    return state
