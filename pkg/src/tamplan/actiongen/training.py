"""Teacher-forced decoder training.

At every position the planner sees the expert's history so far and memory
retrieved through the same localize / goal-check / replan / k-nearest
pipeline that planning uses, queried with the observation the agent would
actually hold at that moment: the initial view for the first action,
afterwards the end frame of the previous recorded step.  Losses run per
position so training computes exactly what the planning loop computes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..gradcore import Adam, Tape, ops
from ..homesim import Demonstration
from ..tam import MemoryRetriever
from ..tam.memory import ProvenanceError
from ..tam.training import holdout_split
from .decoder import DecoderConfig, LinearPlanner, TransformerPlanner, cross_entropy_row
from .vocab import ActionVocabulary


@dataclass
class DecoderTrainConfig:
    epochs: int = 30
    learning_rate: float = 1e-3
    retrieve_k: int = 5
    holdout_every: int = 5
    linear_epochs: int = 20


@dataclass
class DecoderReport:
    loss_curve: list[float] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)


def memory_slot_values(nodes) -> np.ndarray:
    """Cross-attention values of retrieved nodes: affordance + association."""
    return np.array([np.concatenate([n.value_affordance, n.value_assoc])
                     for n in nodes])


def observation_before(demo: Demonstration, position: int) -> np.ndarray:
    """End-frame features the agent holds before predicting action `position`."""
    if position == 0:
        return demo.initial_obs.end_features
    return demo.steps[position - 1][0].end_features


def precompute_retrievals(demos, retriever: MemoryRetriever,
                          exclude_own_episode: bool = True):
    """Per-episode, per-position memory slot matrices (includes the STOP slot).

    Training queries come from episodes that are themselves in memory, so
    by default a demo's own nodes are masked out of its retrievals; that
    matches evaluation, where the current episode never has memory nodes.
    The goal-check / replan chain threads the previous position's node
    exactly as the planning loop does.
    """
    memory = retriever.memory
    slots = []
    for demo in demos:
        own = memory.episode_index.get(demo.episode_id) \
            if exclude_own_episode else None
        if own is not None and len(own) >= len(memory):
            own = None
        per_position = []
        prev = None
        for position in range(len(demo.steps) + 1):
            frame = observation_before(demo, min(position, len(demo.steps)))
            step = retriever.step(frame, prev, demo.goal.id, exclude=own)
            prev = step.node
            per_position.append(memory_slot_values(step.retrieved))
        slots.append(per_position)
    return slots


def _episode_loss(planner: TransformerPlanner, goal_id: int, tokens: list[int],
                  slots, vocab_size: int):
    losses = []
    for position, target in enumerate(tokens):
        memory = slots[position] if slots is not None else None
        logits = planner.forward_positions(goal_id, tokens[:position], memory)
        last = ops.take_rows(logits, [logits.shape[0] - 1])
        losses.append(cross_entropy_row(last, target, vocab_size))
    total = losses[0]
    for extra in losses[1:]:
        total = ops.add(total, extra)
    return ops.scale(total, 1.0 / len(losses))


def _check_provenance(demos, memory, vocab: ActionVocabulary,
                      dataset_hash: str | None):
    mem_hash = memory.provenance.get("dataset_hash")
    if dataset_hash is not None and mem_hash is not None and mem_hash != dataset_hash:
        raise ProvenanceError(
            f"memory built from dataset {mem_hash[:12]}, decoder asked to train "
            f"on {dataset_hash[:12]}"
        )
    for demo in demos:
        for _, action in demo.steps:
            vocab.encode_action(action)   # raises on vocabulary mismatch


def train_decoder(demos, retriever: MemoryRetriever | None, vocab: ActionVocabulary,
                  config: DecoderTrainConfig, seed: int,
                  use_memory: bool = True, use_goal: bool = True,
                  dataset_hash: str | None = None,
                  holdout: bool = True) -> tuple[TransformerPlanner, DecoderReport]:
    if use_memory and retriever is None:
        raise ValueError("memory-conditioned training needs a retriever")
    if retriever is not None:
        _check_provenance(demos, retriever.memory, vocab, dataset_hash)
    else:
        for demo in demos:
            for _, action in demo.steps:
                vocab.encode_action(action)
    train, held = holdout_split(demos, config.holdout_every) if holdout else (demos, [])
    n_goals = max(d.goal.id for d in demos) + 1
    rng = np.random.default_rng(seed)
    planner = TransformerPlanner(rng, DecoderConfig(
        vocab_size=len(vocab), n_goals=n_goals,
        use_memory=use_memory, use_goal=use_goal))
    optimizer = Adam(planner.parameters(), config.learning_rate)
    report = DecoderReport()

    tokens = [vocab.encode_demo(d) for d in train]
    slots = precompute_retrievals(train, retriever) \
        if use_memory else [None] * len(train)

    for _ in range(config.epochs):
        order = rng.permutation(len(train))
        epoch_losses = []
        for i in order:
            with Tape() as tape:
                loss = _episode_loss(planner, train[int(i)].goal.id, tokens[int(i)],
                                     slots[int(i)], len(vocab))
            tape.backward(loss)
            optimizer.step()
            epoch_losses.append(loss.item())
        report.loss_curve.append(float(np.mean(epoch_losses)))

    if held:
        report.metrics["holdout_next_action_accuracy"] = next_action_accuracy(
            planner, held, retriever, vocab)
    return planner, report


def next_action_accuracy(planner, demos, retriever: MemoryRetriever | None,
                         vocab: ActionVocabulary) -> float:
    """Teacher-forced argmax accuracy over every position, STOP included."""
    use_memory = planner.config.use_memory and retriever is not None
    slots = precompute_retrievals(demos, retriever) if use_memory \
        else [None] * len(demos)
    hits = total = 0
    for demo, per_position in zip(demos, slots):
        token_seq = vocab.encode_demo(demo)
        for position, target in enumerate(token_seq):
            memory_values = per_position[position] if use_memory else None
            probs = planner.next_distribution(demo.goal.id, token_seq[:position],
                                              memory_values)
            hits += int(np.argmax(probs)) == target
            total += 1
    return hits / total


def train_linear_head(demos, retriever: MemoryRetriever, vocab: ActionVocabulary,
                      config: DecoderTrainConfig, seed: int,
                      dataset_hash: str | None = None) -> tuple[LinearPlanner, DecoderReport]:
    """The no-transformer ablation: per-step classification, no history."""
    _check_provenance(demos, retriever.memory, vocab, dataset_hash)
    train, _ = holdout_split(demos, config.holdout_every)
    n_goals = max(d.goal.id for d in demos) + 1
    rng = np.random.default_rng(seed)
    planner = LinearPlanner(rng, len(vocab), n_goals)
    optimizer = Adam(planner.parameters(), config.learning_rate)
    report = DecoderReport()

    tokens = [vocab.encode_demo(d) for d in train]
    slots = precompute_retrievals(train, retriever)

    for _ in range(config.linear_epochs):
        order = rng.permutation(len(train))
        epoch_losses = []
        for i in order:
            demo, seq, per_position = train[int(i)], tokens[int(i)], slots[int(i)]
            with Tape() as tape:
                losses = [
                    cross_entropy_row(planner.logits_for(demo.goal.id, per_position[p]),
                                      target, len(vocab))
                    for p, target in enumerate(seq)
                ]
                total = losses[0]
                for extra in losses[1:]:
                    total = ops.add(total, extra)
                total = ops.scale(total, 1.0 / len(losses))
            tape.backward(total)
            optimizer.step()
            epoch_losses.append(total.item())
        report.loss_curve.append(float(np.mean(epoch_losses)))
    return planner, report
