"""Expert demonstration generation, replay, and the JSON-lines dataset format."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .actions import apply_action
from .apartment import SimConfig, generate_apartment
from .observe import Observation, render_observation
from .snapshot import graph_snapshot
from .tasks import TASK_TEMPLATES, Goal, TaskTemplate, TemplateUnsatisfiable
from .world import SPAWN_ROOMS, Action

DATASET_FORMAT_VERSION = 1


@dataclass
class Demonstration:
    episode_id: int
    goal: Goal
    apartment_seed: int
    spawn_room: str
    initial_obs: Observation
    steps: list[tuple[Observation, Action]]
    final_facts: list[tuple]
    extras: dict = field(default_factory=dict)


def _initial_state(apartment_seed: int, spawn_room: str, config: SimConfig):
    state = generate_apartment(apartment_seed, config)
    state.agent_room = spawn_room
    return state


def run_expert_episode(template: TaskTemplate, apartment_seed: int, spawn_room: str,
                       episode_id: int, rng: np.random.Generator,
                       config: SimConfig) -> Demonstration:
    """Execute one flawless expert episode, rendering noisy observations."""
    state = _initial_state(apartment_seed, spawn_room, config)
    actions = template.expert_actions(state)
    initial_obs = render_observation(state, state, rng, config.noise_sigma)
    steps = []
    for action in actions:
        after = apply_action(state, action)
        obs = render_observation(state, after, rng, config.noise_sigma)
        steps.append((obs, action))
        state = after
    return Demonstration(
        episode_id=episode_id,
        goal=template.goal,
        apartment_seed=apartment_seed,
        spawn_room=spawn_room,
        initial_obs=initial_obs,
        steps=steps,
        final_facts=graph_snapshot(state),
    )


def generate_demonstrations(n_episodes: int, seed: int,
                            apartment_seeds: list[int],
                            config: SimConfig | None = None,
                            templates: list[TaskTemplate] | None = None,
                            max_resamples: int = 50) -> tuple[list[Demonstration], int]:
    """Round-robin goals/apartments/spawns into `n_episodes` demonstrations.

    Returns (demonstrations, resample_count).  Episodes whose template
    cannot be satisfied in the sampled apartment are resampled with the
    next apartment seed, counted, and capped.
    """
    config = config or SimConfig()
    templates = templates or TASK_TEMPLATES
    rng = np.random.default_rng(seed)
    demos: list[Demonstration] = []
    resamples = 0
    for episode_id in range(n_episodes):
        template = templates[episode_id % len(templates)]
        spawn = SPAWN_ROOMS[int(rng.integers(len(SPAWN_ROOMS)))]
        attempt = 0
        while True:
            apt_seed = apartment_seeds[(episode_id + attempt) % len(apartment_seeds)]
            episode_rng = np.random.default_rng([seed, episode_id, attempt])
            try:
                demos.append(run_expert_episode(template, apt_seed, spawn,
                                                episode_id, episode_rng, config))
                break
            except TemplateUnsatisfiable:
                attempt += 1
                resamples += 1
                if attempt > max_resamples:
                    raise
    return demos, resamples


def replay_demonstration(demo: Demonstration, config: SimConfig | None = None) -> list[tuple]:
    """Re-execute the recorded actions from the reconstructed initial state."""
    config = config or SimConfig()
    state = _initial_state(demo.apartment_seed, demo.spawn_room, config)
    for _, action in demo.steps:
        state = apply_action(state, action)
    return graph_snapshot(state)


def _floats(arr) -> list[float]:
    return [float(v) for v in arr]


def demo_to_json(demo: Demonstration) -> dict:
    return {
        "episode_id": demo.episode_id,
        "goal_id": demo.goal.id,
        "goal_text": demo.goal.text,
        "apartment_seed": demo.apartment_seed,
        "spawn_room": demo.spawn_room,
        "initial_obs": {"start": _floats(demo.initial_obs.start_features),
                        "end": _floats(demo.initial_obs.end_features)},
        "steps": [
            {
                "action": {"verb": a.verb, "args": list(a.args)},
                "start": _floats(o.start_features),
                "end": _floats(o.end_features),
                "visible": list(o.visible_objects),
            }
            for o, a in demo.steps
        ],
        "final_facts": [list(f) for f in demo.final_facts],
    }


def demo_from_json(record: dict) -> Demonstration:
    steps = [
        (
            Observation(
                start_features=np.array(s["start"]),
                end_features=np.array(s["end"]),
                visible_objects=tuple(s.get("visible", ())),
            ),
            Action(s["action"]["verb"], tuple(s["action"]["args"])),
        )
        for s in record["steps"]
    ]
    return Demonstration(
        episode_id=record["episode_id"],
        goal=Goal(record["goal_id"], record["goal_text"]),
        apartment_seed=record["apartment_seed"],
        spawn_room=record["spawn_room"],
        initial_obs=Observation(
            start_features=np.array(record["initial_obs"]["start"]),
            end_features=np.array(record["initial_obs"]["end"]),
        ),
        steps=steps,
        final_facts=[tuple(f) for f in record["final_facts"]],
    )


def save_dataset(path, demos: list[Demonstration]) -> str:
    """Write JSON-lines demonstrations; returns the file's sha256."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for demo in demos:
            fh.write(json.dumps(demo_to_json(demo), sort_keys=True,
                                separators=(",", ":")))
            fh.write("\n")
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    return digest


def load_dataset(path) -> list[Demonstration]:
    demos = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                demos.append(demo_from_json(json.loads(line)))
    return demos
