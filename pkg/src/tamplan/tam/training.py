"""Training loops for the memory's three networks.

The affordance encoder trains first; the goal associator then trains its
discriminator head (and goal table) on top of the frozen encoder so the
contrastive geometry survives.  The localization net is independent.
All loops are seeded and single-threaded, so checkpoints are bit-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..gradcore import Adam, Tape, Tensor, ops
from ..homesim import Demonstration
from ..homesim.world import action_class_signature
from .losses import supervised_infonce
from .networks import AffordanceEncoder, GoalAssociator, LocalizationNet


@dataclass
class TamConfig:
    embed_dim: int = 64
    hidden: int = 128
    tau: float = 0.1
    learning_rate: float = 1e-3
    affordance_steps: int = 700
    affordance_labels_per_batch: int = 8
    assoc_steps: int = 2500
    assoc_batch: int = 64
    assoc_progress_window: int = 2
    loc_steps: int = 900
    loc_batch: int = 32
    negative_gap: int = 3
    holdout_every: int = 5
    retrieve_k: int = 5


@dataclass
class TrainReport:
    loss_curve: list[float] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    warnings: int = 0


def holdout_split(demos: list[Demonstration], every: int) -> tuple[list, list]:
    """Deterministic episode-level split: every `every`-th demo is held out."""
    train = [d for i, d in enumerate(demos) if i % every != every - 1]
    held = [d for i, d in enumerate(demos) if i % every == every - 1]
    return train, held


def stacked_observations(demos) -> tuple[np.ndarray, list[tuple], np.ndarray]:
    """All step observations as (N, 2F) rows with signature + goal labels."""
    rows, signatures, goals = [], [], []
    for demo in demos:
        for obs, action in demo.steps:
            rows.append(np.concatenate([obs.start_features, obs.end_features]))
            signatures.append(action_class_signature(action))
            goals.append(demo.goal.id)
    return np.array(rows), signatures, np.array(goals, dtype=np.int64)


def _signature_ids(signatures, table=None):
    if table is None:
        table = {sig: i for i, sig in enumerate(sorted(set(signatures)))}
    return np.array([table[s] for s in signatures], dtype=np.int64), table


def roc_auc(labels: np.ndarray, scores: np.ndarray) -> float:
    """Rank-based AUC with midrank tie handling."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    pos = labels > 0.5
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def nearest_centroid_accuracy(train_z, train_labels, test_z, test_labels) -> float:
    """Label recovery by cosine-nearest class centroid in projection space."""
    classes = np.unique(train_labels)
    centroids = np.stack([train_z[train_labels == c].mean(axis=0) for c in classes])
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True) + 1e-12
    sims = test_z @ centroids.T
    predicted = classes[np.argmax(sims, axis=1)]
    return float(np.mean(predicted == test_labels))


def train_affordance(demos: list[Demonstration], config: TamConfig, seed: int,
                     feature_dim: int) -> tuple[AffordanceEncoder, TrainReport]:
    """Contrastive training; positives share a class-level action signature."""
    train, held = holdout_split(demos, config.holdout_every)
    x_train, sig_train, _ = stacked_observations(train)
    labels, table = _signature_ids(sig_train)
    rng = np.random.default_rng(seed)
    net = AffordanceEncoder(rng, feature_dim, config.embed_dim, config.hidden,
                            config.tau)
    optimizer = Adam(net.parameters(), config.learning_rate)
    report = TrainReport()

    eligible = [c for c in np.unique(labels) if (labels == c).sum() >= 2]
    if len(eligible) < 2:
        raise ValueError("need at least two action classes with two examples each")
    by_class = {c: np.flatnonzero(labels == c) for c in eligible}

    for _ in range(config.affordance_steps):
        picked = rng.choice(len(eligible), size=min(config.affordance_labels_per_batch,
                                                    len(eligible)), replace=False)
        idx = np.concatenate([
            rng.choice(by_class[eligible[c]], size=2, replace=False) for c in picked
        ])
        with Tape() as tape:
            _, z = net(Tensor(x_train[idx]))
            loss, used, skipped = supervised_infonce(z, labels[idx], config.tau)
            loss = ops.scale(loss, 1.0 / max(used, 1))
        tape.backward(loss)
        optimizer.step()
        report.loss_curve.append(loss.item())
        report.warnings += skipped

    x_held, sig_held, _ = stacked_observations(held)
    held_mask = np.array([s in table for s in sig_held])
    held_labels = np.array([table[s] for s, ok in zip(sig_held, held_mask) if ok])
    _, z_train = net.embed_numpy(x_train)
    _, z_held = net.embed_numpy(x_held[held_mask])
    report.metrics["nearest_centroid_accuracy"] = nearest_centroid_accuracy(
        z_train, labels, z_held, held_labels)
    intra, inter = cosine_separation(z_train, labels)
    report.metrics["intra_action_cosine"] = intra
    report.metrics["inter_action_cosine"] = inter
    return net, report


def cosine_separation(z: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    sims = z @ z.T
    same = labels[:, None] == labels[None, :]
    off_diag = ~np.eye(len(labels), dtype=bool)
    return (float(sims[same & off_diag].mean()),
            float(sims[~same & off_diag].mean()))


def _goal_pair_pool(demos) -> dict[int, list[int]]:
    pool: dict[int, list[int]] = {}
    for i, demo in enumerate(demos):
        pool.setdefault(demo.goal.id, []).append(i)
    return pool


def _sample_goal_pairs(demos, values_by_demo, pool, n, rng, progress_window=None):
    """Balanced same-goal / different-goal pairs, conditioned on the anchor goal.

    With a progress window, the second observation is drawn from a step
    index near the first one's, matching the planner's check between
    consecutively localized nodes.
    """
    goals = sorted(pool)
    rows_a, rows_b, goal_ids, labels = [], [], [], []
    for i in range(n):
        positive = i % 2 == 0
        g = goals[int(rng.integers(len(goals)))]
        d1 = pool[g][int(rng.integers(len(pool[g])))]
        if positive:
            d2 = pool[g][int(rng.integers(len(pool[g])))]
        else:
            other = goals[int(rng.integers(len(goals) - 1))]
            if other >= g:
                other = goals[(goals.index(other) + 1) % len(goals)]
            d2 = pool[other][int(rng.integers(len(pool[other])))]
        va = values_by_demo[d1]
        vb = values_by_demo[d2]
        t1 = int(rng.integers(len(va)))
        if progress_window is None:
            t2 = int(rng.integers(len(vb)))
        else:
            hi = min(len(vb) - 1, t1 + progress_window)
            lo = max(0, min(t1 - progress_window, hi))
            t2 = int(rng.integers(lo, hi + 1))
        rows_a.append(va[t1])
        rows_b.append(vb[t2])
        goal_ids.append(g)
        labels.append(1.0 if positive else 0.0)
    return (np.array(rows_a), np.array(rows_b), np.array(goal_ids, dtype=np.int64),
            np.array(labels)[:, None])


def train_goal_association(demos: list[Demonstration], encoder: AffordanceEncoder,
                           config: TamConfig, seed: int,
                           naive: bool = False) -> tuple[GoalAssociator, TrainReport]:
    """BCE discriminator training over frozen shared-encoder values.

    The encoder stays frozen: a single observation cannot identify its
    goal out of distribution (the same scene occurs under many goals), so
    letting the goal loss reshape the encoder only memorizes training
    episodes and costs held-out accuracy.
    """
    train, held = holdout_split(demos, config.holdout_every)
    if len({d.goal.id for d in train}) < 2:
        raise ValueError("goal association needs at least two distinct goals")
    n_goals = max(d.goal.id for d in demos) + 1

    def demo_values(subset):
        out = []
        for demo in subset:
            rows = np.array([np.concatenate([o.start_features, o.end_features])
                             for o, _ in demo.steps])
            out.append(encoder.embed_numpy(rows)[0])
        return out

    values_train = demo_values(train)
    values_held = demo_values(held)
    rng = np.random.default_rng(seed)
    net = GoalAssociator(rng, config.embed_dim, n_goals, naive=naive)
    optimizer = Adam(net.parameters(), config.learning_rate)
    report = TrainReport()
    pool = _goal_pair_pool(train)

    for _ in range(config.assoc_steps):
        a, b, g, y = _sample_goal_pairs(train, values_train, pool,
                                        config.assoc_batch, rng,
                                        config.assoc_progress_window)
        with Tape() as tape:
            logits = net.logits(Tensor(a), Tensor(b), g)
            loss = ops.bce_with_logits(logits, Tensor(y))
        tape.backward(loss)
        optimizer.step()
        report.loss_curve.append(loss.item())

    held_pool = _goal_pair_pool(held)
    a, b, g, y = _sample_goal_pairs(held, values_held, held_pool, 400,
                                    np.random.default_rng(seed + 1),
                                    config.assoc_progress_window)
    probs = ops.sigmoid(net.logits(Tensor(a), Tensor(b), g)).data.reshape(-1)
    report.metrics["holdout_accuracy"] = float(np.mean((probs > 0.5) == (y.reshape(-1) > 0.5)))
    return net, report


def _episode_frames(demo) -> list[tuple[int, str, np.ndarray]]:
    """(time, side, features) for every frame; start of step t shares the
    time index of the previous step's end frame."""
    frames = [(0, "end", demo.initial_obs.end_features)]
    for t, (obs, _) in enumerate(demo.steps, start=1):
        frames.append((t - 1, "start", obs.start_features))
        frames.append((t, "end", obs.end_features))
    return frames


def _adjacency_pairs(demos, gap: int, n: int, rng):
    """Positive pairs straddle one moment; negatives are >= gap steps apart
    or come from different episodes."""
    per_episode = [_episode_frames(d) for d in demos]
    rows_a, rows_b, labels = [], [], []
    for i in range(n):
        positive = i % 2 == 0
        e = int(rng.integers(len(per_episode)))
        frames = per_episode[e]
        if positive:
            times = sorted({t for t, side, _ in frames if side == "end"})
            anchor_t = times[int(rng.integers(len(times)))]
            same_t = [f for f in frames if f[0] == anchor_t]
            f1 = same_t[int(rng.integers(len(same_t)))]
            f2 = same_t[int(rng.integers(len(same_t)))]
        else:
            if rng.random() < 0.5:
                f1 = frames[int(rng.integers(len(frames)))]
                other = [f for f in frames if abs(f[0] - f1[0]) >= gap]
                if not other:
                    e2 = int(rng.integers(len(per_episode)))
                    f2 = per_episode[e2][int(rng.integers(len(per_episode[e2])))]
                else:
                    f2 = other[int(rng.integers(len(other)))]
            else:
                e2 = (e + 1 + int(rng.integers(len(per_episode) - 1))) % len(per_episode)
                f1 = frames[int(rng.integers(len(frames)))]
                f2 = per_episode[e2][int(rng.integers(len(per_episode[e2])))]
        rows_a.append(f1[2])
        rows_b.append(f2[2])
        labels.append(1.0 if positive else 0.0)
    return np.array(rows_a), np.array(rows_b), np.array(labels)[:, None]


def train_localization(demos: list[Demonstration], config: TamConfig,
                       seed: int, feature_dim: int) -> tuple[LocalizationNet, TrainReport]:
    """Self-supervised adjacency training for the siamese scorer."""
    train, held = holdout_split(demos, config.holdout_every)
    usable = [d for d in train if len(d.steps) >= 2]
    if not usable:
        raise ValueError("localization needs episodes with at least two steps")
    longest = max(len(d.steps) for d in usable)
    if config.negative_gap > longest:
        raise ValueError(
            f"negative gap {config.negative_gap} exceeds the longest episode ({longest})"
        )
    rng = np.random.default_rng(seed)
    net = LocalizationNet(rng, feature_dim, config.embed_dim, config.hidden)
    optimizer = Adam(net.parameters(), config.learning_rate)
    report = TrainReport()

    for _ in range(config.loc_steps):
        a, b, y = _adjacency_pairs(usable, config.negative_gap, config.loc_batch, rng)
        with Tape() as tape:
            logits = net.pair_logits(net.embed(Tensor(a)), net.embed(Tensor(b)))
            loss = ops.bce_with_logits(logits, Tensor(y))
        tape.backward(loss)
        optimizer.step()
        report.loss_curve.append(loss.item())

    held_usable = [d for d in held if len(d.steps) >= 2]
    a, b, y = _adjacency_pairs(held_usable, config.negative_gap, 600,
                               np.random.default_rng(seed + 1))
    logits = net.pair_logits(net.embed(Tensor(a)), net.embed(Tensor(b)))
    scores = ops.sigmoid(logits).data.reshape(-1)
    report.metrics["holdout_auc"] = roc_auc(y.reshape(-1), scores)
    return net, report
