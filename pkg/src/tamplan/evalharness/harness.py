"""Episode construction, protocol execution, and the ablation suite."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..homesim import SPAWN_ROOMS, SimConfig, run_expert_episode
from ..homesim.tasks import TASK_TEMPLATES
from .metrics import executability, final_graph_after, graph_f1, lcs_normalized
from .protocols import (
    INTERACTIVE_MODES,
    AttackConfig,
    EvalMode,
    TestEpisode,
    make_interface,
)
from .report import EvalReport


@dataclass
class EvalConfig:
    test_apartment_seeds: list[int] = field(default_factory=lambda: list(range(10)))
    n_episodes: int = 50
    eval_seed: int = 1234
    attack: AttackConfig = field(default_factory=AttackConfig)
    max_step_factor: int = 2
    max_step_slack: int = 4
    lcs_counts_attacked: bool = False


def build_test_episodes(config: EvalConfig, sim_config: SimConfig | None = None
                        ) -> list[TestEpisode]:
    """Goal x test-apartment grid, trimmed to n_episodes; spawn rooms and the
    expert's observation noise are seeded off eval_seed, so every planner
    configuration sees byte-identical episodes."""
    sim_config = sim_config or SimConfig()
    episodes = []
    episode_id = 0
    for apartment_seed in config.test_apartment_seeds:
        for template in TASK_TEMPLATES:
            rng = np.random.default_rng([config.eval_seed, apartment_seed,
                                         template.goal.id])
            spawn = SPAWN_ROOMS[int(rng.integers(len(SPAWN_ROOMS)))]
            gt = run_expert_episode(template, apartment_seed, spawn, episode_id,
                                    np.random.default_rng(
                                        [config.eval_seed, apartment_seed,
                                         template.goal.id, 1]),
                                    sim_config)
            episodes.append(TestEpisode(
                episode_id=episode_id, apartment_seed=apartment_seed,
                spawn_room=spawn, goal_id=template.goal.id, gt_demo=gt,
                sim_config=sim_config))
            episode_id += 1
    return episodes[:config.n_episodes]


class OracleReplayPlanner:
    """Replays the episode's ground-truth signatures; the upper bound."""

    def __init__(self, episodes: list[TestEpisode]):
        self._by_key = {(e.apartment_seed, e.goal_id): e.gt_signatures
                        for e in episodes}
        self._active: list | None = None

    def bind(self, episode: TestEpisode):
        self._active = list(self._by_key[(episode.apartment_seed, episode.goal_id)])

    def plan_episode(self, goal_id, interface, max_steps):
        from ..actiongen.planner import Plan, PlanStep

        plan = Plan(goal_id=goal_id)
        interface.reset()
        for signature in self._active[:max_steps]:
            outcome = interface.submit(signature)
            plan.steps.append(PlanStep(
                predicted_signature=signature, predicted_token=-1,
                executed=outcome.executed, failure_reason=outcome.failure_reason,
                attacked=outcome.attacked,
                executed_signature=outcome.executed_signature))
        plan.stopped = True
        return plan


def _lcs_sequence(plan, mode: EvalMode, count_attacked: bool) -> list[tuple]:
    """What the LCS compares against ground truth under each protocol."""
    if mode not in INTERACTIVE_MODES:
        return plan.predicted_signatures
    picked = []
    for step in plan.steps:
        if not step.executed:
            continue
        if step.attacked and count_attacked:
            picked.append(step.executed_signature)
        else:
            picked.append(step.predicted_signature)
    return picked


def evaluate_episode(planner, episode: TestEpisode, mode: EvalMode,
                     config: EvalConfig) -> dict:
    if hasattr(planner, "bind"):
        planner.bind(episode)
    interface = make_interface(mode, episode, config.eval_seed,
                               config.attack if mode is EvalMode.VIS_INTERACTIVE_ATTACK
                               else None)
    max_steps = config.max_step_factor * len(episode.gt_demo.steps) + \
        config.max_step_slack
    plan = planner.plan_episode(episode.goal_id, interface, max_steps)

    gt_signatures = episode.gt_signatures
    gt_facts = episode.gt_demo.final_facts
    if mode in INTERACTIVE_MODES:
        lcs = lcs_normalized(_lcs_sequence(plan, mode, config.lcs_counts_attacked),
                             gt_signatures)
        execut = 1.0   # only successfully executed actions count here
        pred_facts = interface.final_facts()
    else:
        predicted = plan.predicted_signatures
        lcs = lcs_normalized(predicted, gt_signatures)
        execut = executability(predicted, episode.initial_state())
        pred_facts = final_graph_after(predicted, episode.initial_state())
    f1, f1_state, f1_rel = graph_f1(pred_facts, gt_facts)
    return {
        "episode_id": episode.episode_id,
        "apartment_seed": episode.apartment_seed,
        "goal_id": episode.goal_id,
        "lcs": lcs,
        "executability": execut,
        "f1": f1,
        "f1_state": f1_state,
        "f1_relation": f1_rel,
        "steps": len(plan.steps),
        "replans": sum(1 for s in plan.steps if s.replan_trials > 0),
    }


def run_evaluation(planner, episodes: list[TestEpisode], mode: EvalMode,
                   config: EvalConfig, method: str = "model",
                   config_hashes: dict | None = None) -> EvalReport:
    if mode is EvalMode.VIS_INTERACTIVE_ATTACK and \
            not getattr(planner, "supports_interactive", True):
        raise ValueError("attack evaluation requires an interactive-capable planner")
    report = EvalReport(mode=mode.value, method=method,
                        config_hashes=config_hashes or {})
    for episode in episodes:
        report.add_episode(evaluate_episode(planner, episode, mode, config))
    return report.finalize()


ABLATION_VARIANTS = ["full", "no_replan", "pixel_localize", "no_trans", "naive_goal"]


def run_ablation_suite(planner_factory, episodes: list[TestEpisode],
                       config: EvalConfig,
                       modes=(EvalMode.VIS_INTERACTIVE,
                              EvalMode.VIS_INTERACTIVE_ATTACK)) -> list[EvalReport]:
    """One report per variant per interactive mode, full model first.

    `planner_factory(variant)` must return a planner for each variant name.
    """
    reports = []
    for mode in modes:
        for variant in ABLATION_VARIANTS:
            planner = planner_factory(variant)
            reports.append(run_evaluation(planner, episodes, mode, config,
                                          method=variant))
    return reports
