"""Sequence and scene-graph metrics."""

from __future__ import annotations

from ..homesim import NotExecutable, apply_action, graph_snapshot
from ..homesim.snapshot import RELATION_FACT, STATE_FACT
from ..actiongen.vocab import ground_signature


def lcs_normalized(pred: list, gt: list) -> float:
    """Longest-common-subsequence length over max(|pred|, |gt|).

    Both sequences empty scores 1.0 by convention; exactly one empty
    scores 0.0.
    """
    if not pred and not gt:
        return 1.0
    if not pred or not gt:
        return 0.0
    m, n = len(pred), len(gt)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if pred[i - 1] == gt[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[m][n] / max(m, n)


def simulate_signatures(signatures: list[tuple], initial_state):
    """Ground and run a class-level plan; failed steps do not advance state.

    Returns (final_state, per-step success flags).
    """
    state = initial_state.copy()
    flags = []
    for signature in signatures:
        action = ground_signature(signature, state)
        if action is None:
            flags.append(False)
            continue
        try:
            state = apply_action(state, action)
            flags.append(True)
        except NotExecutable:
            flags.append(False)
    return state, flags


def executability(signatures: list[tuple], initial_state) -> float:
    """Fraction of a predicted plan the simulator accepts, in order."""
    if not signatures:
        return 0.0
    _, flags = simulate_signatures(signatures, initial_state)
    return sum(flags) / len(flags)


def _f1(pred: set, gt: set) -> float:
    if not pred and not gt:
        return 1.0
    if not pred or not gt:
        return 0.0
    hits = len(pred & gt)
    precision = hits / len(pred)
    recall = hits / len(gt)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def graph_f1(pred_facts, gt_facts) -> tuple[float, float, float]:
    """(overall F1, F1 over state facts, F1 over relation facts)."""
    pred = {tuple(f) for f in pred_facts}
    gt = {tuple(f) for f in gt_facts}
    state_pred = {f for f in pred if f[0] == STATE_FACT}
    state_gt = {f for f in gt if f[0] == STATE_FACT}
    rel_pred = {f for f in pred if f[0] == RELATION_FACT}
    rel_gt = {f for f in gt if f[0] == RELATION_FACT}
    return _f1(pred, gt), _f1(state_pred, state_gt), _f1(rel_pred, rel_gt)


def final_graph_after(signatures: list[tuple], initial_state) -> list[tuple]:
    state, _ = simulate_signatures(signatures, initial_state)
    return graph_snapshot(state)
