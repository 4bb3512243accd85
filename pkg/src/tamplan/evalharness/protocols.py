"""The four evaluation protocols as per-episode interfaces.

A planner drives an interface through reset()/submit(signature); what
comes back depends on the protocol: nothing (pure text), the recorded
next observation (static), the live simulator's view (interactive), or
the view after a randomly substituted action (interactive attack).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..actiongen.vocab import ground_signature
from ..homesim import (
    Demonstration,
    NotExecutable,
    SimConfig,
    apply_action,
    executable_actions,
    generate_apartment,
    graph_snapshot,
    render_observation,
)
from ..homesim.world import action_class_signature


class EvalMode(enum.Enum):
    PURE_TEXT = "pure_text"
    VIS_STATIC = "vis_static"
    VIS_INTERACTIVE = "vis_interactive"
    VIS_INTERACTIVE_ATTACK = "vis_interactive_attack"


INTERACTIVE_MODES = (EvalMode.VIS_INTERACTIVE, EvalMode.VIS_INTERACTIVE_ATTACK)


@dataclass
class AttackConfig:
    probability: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("attack probability must lie in [0, 1]")


@dataclass
class StepOutcome:
    observation: object | None
    executed: bool | None          # None when the protocol cannot execute
    failure_reason: str | None = None
    attacked: bool = False
    executed_signature: tuple | None = None
    ended: bool = False


@dataclass
class TestEpisode:
    """One evaluation unit: a goal in a concrete test apartment, with the
    expert's demonstration as ground truth."""

    episode_id: int
    apartment_seed: int
    spawn_room: str
    goal_id: int
    gt_demo: Demonstration
    sim_config: SimConfig

    def initial_state(self):
        state = generate_apartment(self.apartment_seed, self.sim_config)
        state.agent_room = self.spawn_room
        return state

    @property
    def gt_signatures(self) -> list[tuple]:
        return [action_class_signature(a) for _, a in self.gt_demo.steps]


class PureTextInterface:
    """Goal-only planning: no observations, no execution feedback."""

    def __init__(self, episode: TestEpisode):
        self.episode = episode

    def reset(self):
        return None

    def submit(self, signature) -> StepOutcome:
        return StepOutcome(observation=None, executed=None)


class StaticInterface:
    """Replays the recorded observation stream regardless of the action."""

    def __init__(self, episode: TestEpisode):
        self.episode = episode
        self._cursor = 0

    def reset(self):
        self._cursor = 0
        return self.episode.gt_demo.initial_obs

    def submit(self, signature) -> StepOutcome:
        steps = self.episode.gt_demo.steps
        obs = steps[min(self._cursor, len(steps) - 1)][0]
        self._cursor += 1
        return StepOutcome(observation=obs, executed=None)


class InteractiveInterface:
    """Live simulator: the submitted action (when executable) advances the
    state and the returned observation reflects it."""

    def __init__(self, episode: TestEpisode, rng: np.random.Generator):
        self.episode = episode
        self.rng = rng
        self.state = None

    def reset(self):
        self.state = self.episode.initial_state()
        sigma = self.episode.sim_config.noise_sigma
        return render_observation(self.state, self.state, self.rng, sigma)

    def _execute(self, action):
        sigma = self.episode.sim_config.noise_sigma
        before = self.state
        new_state = apply_action(before, action)
        self.state = new_state
        return render_observation(before, new_state, self.rng, sigma)

    def submit(self, signature) -> StepOutcome:
        sigma = self.episode.sim_config.noise_sigma
        action = ground_signature(signature, self.state)
        if action is None:
            obs = render_observation(self.state, self.state, self.rng, sigma)
            return StepOutcome(obs, executed=False, failure_reason="no_such_object")
        try:
            obs = self._execute(action)
        except NotExecutable as err:
            obs = render_observation(self.state, self.state, self.rng, sigma)
            return StepOutcome(obs, executed=False, failure_reason=err.reason)
        return StepOutcome(obs, executed=True,
                           executed_signature=action_class_signature(action))

    def final_facts(self) -> list[tuple]:
        return graph_snapshot(self.state)


class AttackInterface(InteractiveInterface):
    """Interactive protocol where, with probability p per step, the predicted
    action is replaced by a uniformly random currently-executable one and
    the observation of the substituted action is fed back."""

    def __init__(self, episode: TestEpisode, rng: np.random.Generator,
                 attack: AttackConfig, attack_rng: np.random.Generator):
        super().__init__(episode, rng)
        self.attack = attack
        self.attack_rng = attack_rng

    def submit(self, signature) -> StepOutcome:
        if self.attack.probability > 0.0 and \
                self.attack_rng.random() < self.attack.probability:
            options = executable_actions(self.state)
            action = options[int(self.attack_rng.integers(len(options)))]
            obs = self._execute(action)
            return StepOutcome(obs, executed=True, attacked=True,
                               executed_signature=action_class_signature(action))
        return super().submit(signature)


def make_interface(mode: EvalMode, episode: TestEpisode, eval_seed: int,
                   attack: AttackConfig | None = None):
    key = (episode.apartment_seed, episode.goal_id)
    obs_rng = np.random.default_rng([eval_seed, *key, 2])
    if mode is EvalMode.PURE_TEXT:
        return PureTextInterface(episode)
    if mode is EvalMode.VIS_STATIC:
        return StaticInterface(episode)
    if mode is EvalMode.VIS_INTERACTIVE:
        return InteractiveInterface(episode, obs_rng)
    if mode is EvalMode.VIS_INTERACTIVE_ATTACK:
        if attack is None:
            raise ValueError("attack mode requires an AttackConfig")
        attack_rng = np.random.default_rng([attack.seed, *key, 3])
        return AttackInterface(episode, obs_rng, attack, attack_rng)
    raise ValueError(f"unsupported mode {mode}")
