"""Closed-loop planning over an episode interface.

Per step: localize the current observation in memory, check goal
association against the previously localized node (replanning when the
score falls under threshold), retrieve the k nearest nodes, decode the
next action greedily, and submit it.  Failed actions are recorded and
skipped; the loop ends at STOP, the step budget, or the interface's end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..tam import MemoryRetriever
from .training import memory_slot_values
from .vocab import ActionVocabulary


@dataclass
class PlanStep:
    predicted_signature: tuple
    predicted_token: int
    executed: bool
    failure_reason: str | None = None
    attacked: bool = False
    executed_signature: tuple | None = None
    localized_node: int | None = None
    replan_trials: int = 0
    retrieved_nodes: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "predicted": list(self.predicted_signature),
            "executed": self.executed,
            "failure_reason": self.failure_reason,
            "attacked": self.attacked,
            "executed_action": list(self.executed_signature)
            if self.executed_signature else None,
            "localized_node": self.localized_node,
            "replan_trials": self.replan_trials,
            "retrieved_nodes": self.retrieved_nodes,
        }


@dataclass
class Plan:
    goal_id: int
    steps: list[PlanStep] = field(default_factory=list)
    stopped: bool = False

    @property
    def predicted_signatures(self) -> list[tuple]:
        return [s.predicted_signature for s in self.steps]

    def write_trace(self, path) -> None:
        with open(path, "a", encoding="utf-8") as fh:
            for step in self.steps:
                fh.write(json.dumps({"goal_id": self.goal_id, **step.to_json()},
                                    sort_keys=True))
                fh.write("\n")


class TamPlanner:
    """Bundles a decoding head with the memory machinery for planning."""

    def __init__(self, head, vocab: ActionVocabulary,
                 retriever: MemoryRetriever | None = None):
        self.head = head
        self.vocab = vocab
        self.retriever = retriever
        self.uses_memory = bool(head.config.use_memory and retriever is not None)

    def plan_episode(self, goal_id: int, interface, max_steps: int) -> Plan:
        plan = Plan(goal_id=goal_id)
        obs = interface.reset()
        prev_node = None
        history: list[int] = []
        for _ in range(max_steps):
            node = None
            trials = 0
            slots = None
            retrieved_ids: list[int] = []
            if self.uses_memory and obs is not None:
                step = self.retriever.step(np.asarray(obs.end_features), prev_node,
                                           goal_id)
                node = step.node
                prev_node = node
                trials = step.replan_trials
                slots = memory_slot_values(step.retrieved)
                retrieved_ids = [n.index for n in step.retrieved]

            probs = self.head.next_distribution(goal_id, history, slots)
            token = int(np.argmax(probs))     # ties resolve to the lowest id
            if token == self.vocab.stop_id:
                plan.stopped = True
                break
            signature = self.vocab.decode(token)
            outcome = interface.submit(signature)
            plan.steps.append(PlanStep(
                predicted_signature=signature,
                predicted_token=token,
                executed=outcome.executed,
                failure_reason=outcome.failure_reason,
                attacked=outcome.attacked,
                executed_signature=outcome.executed_signature,
                localized_node=None if node is None else node.index,
                replan_trials=trials,
                retrieved_nodes=retrieved_ids,
            ))
            history.append(token)
            obs = outcome.observation
            if outcome.ended or len(history) >= self.head.config.max_len - 1:
                break
        return plan
