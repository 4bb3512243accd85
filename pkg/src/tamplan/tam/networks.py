"""The three learned components of the affordance memory.

* AffordanceEncoder: shared observation encoder plus a projection head
  whose unit-norm outputs cluster observations of the same action.
* GoalAssociator: goal-conditioned discriminator over two encoded
  observations; scores whether both serve the same goal.
* LocalizationNet: siamese scorer of whether two single frames show the
  same moment; its branch embeddings key the memory graph.
"""

from __future__ import annotations

import numpy as np

from ..gradcore import Tensor, load_arrays, nn, ops, save_arrays

GOAL_EMBED_DIM = 16


def _abs(t: Tensor) -> Tensor:
    # |x| = relu(x) + relu(-x); bitwise symmetric under argument swap
    return ops.add(ops.relu(t), ops.relu(ops.negate(t)))


class AffordanceEncoder(nn.Module):
    """Enc: stacked (start, end) features -> D-dim value; head -> unit-norm z."""

    def __init__(self, rng: np.random.Generator, feature_dim: int,
                 embed_dim: int = 64, hidden: int = 128, tau: float = 0.1,
                 meta: dict | None = None):
        self.enc = nn.MLP(rng, [2 * feature_dim, hidden, embed_dim])
        self.proj = nn.MLP(rng, [embed_dim, embed_dim, embed_dim, embed_dim])
        self.feature_dim = feature_dim
        self.embed_dim = embed_dim
        self.hidden = hidden
        self.tau = tau
        self.meta = dict(meta or {})

    def encode(self, stacked: Tensor) -> Tensor:
        return self.enc(stacked)

    def project(self, values: Tensor) -> Tensor:
        return ops.l2_normalize(self.proj(ops.relu(values)))

    def __call__(self, stacked: Tensor) -> tuple[Tensor, Tensor]:
        values = self.encode(stacked)
        return values, self.project(values)

    def embed_numpy(self, stacked: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Inference path: (N, 2F) array -> (values, unit-norm projections)."""
        v, z = self(Tensor(np.atleast_2d(stacked)))
        return v.data, z.data

    def save(self, path, extra_meta: dict | None = None):
        meta = {"kind": "affordance", "feature_dim": self.feature_dim,
                "embed_dim": self.embed_dim, "hidden": self.hidden,
                "tau": self.tau, **self.meta, **(extra_meta or {})}
        save_arrays(path, {k: p.data for k, p in self.named_parameters()}, meta)

    @classmethod
    def load(cls, path) -> "AffordanceEncoder":
        arrays, meta = load_arrays(path)
        net = cls(np.random.default_rng(0), meta["feature_dim"], meta["embed_dim"],
                  meta["hidden"], meta["tau"], meta=meta)
        _restore(net, arrays)
        return net


class GoalAssociator(nn.Module):
    """P(same goal | value_i, value_j, goal); optionally goal-blind ("naive")."""

    def __init__(self, rng: np.random.Generator, embed_dim: int = 64,
                 n_goals: int = 8, hidden: int = 64, naive: bool = False,
                 meta: dict | None = None):
        self.naive = naive
        self.embed_dim = embed_dim
        self.n_goals = n_goals
        self.hidden = hidden
        in_dim = 2 * embed_dim + (0 if naive else GOAL_EMBED_DIM)
        self.goal_embed = None if naive else nn.Embedding(rng, n_goals, GOAL_EMBED_DIM)
        self.head = nn.MLP(rng, [in_dim, hidden, 1])
        self.meta = dict(meta or {})

    def logits(self, value_a: Tensor, value_b: Tensor, goal_ids) -> Tensor:
        parts = [value_a, value_b]
        if not self.naive:
            self._check_goals(goal_ids)
            parts.append(self.goal_embed(goal_ids))
        return self.head(ops.concat(parts, axis=1))

    def _check_goals(self, goal_ids):
        ids = np.asarray(goal_ids)
        if ids.size and (ids.min() < 0 or ids.max() >= self.n_goals):
            raise ValueError(f"goal id out of vocabulary (size {self.n_goals})")

    def score(self, value_a: np.ndarray, value_b: np.ndarray, goal_id: int) -> float:
        """Deterministic probability for a single pair."""
        if not self.naive:
            self._check_goals([goal_id])
        logit = self.logits(Tensor(np.atleast_2d(value_a)),
                            Tensor(np.atleast_2d(value_b)),
                            [int(goal_id)])
        return float(ops.sigmoid(logit).data.reshape(()))

    def score_batch(self, values_a: np.ndarray, value_b: np.ndarray,
                    goal_id: int) -> np.ndarray:
        """Probabilities of many candidate values against one fixed value."""
        n = values_a.shape[0]
        b = np.broadcast_to(value_b, (n, value_b.shape[-1])).copy()
        logits = self.logits(Tensor(values_a), Tensor(b), [int(goal_id)] * n)
        return ops.sigmoid(logits).data.reshape(-1)

    def save(self, path, extra_meta: dict | None = None):
        meta = {"kind": "goal_assoc", "embed_dim": self.embed_dim,
                "n_goals": self.n_goals, "hidden": self.hidden,
                "naive": self.naive, **self.meta, **(extra_meta or {})}
        save_arrays(path, {k: p.data for k, p in self.named_parameters()}, meta)

    @classmethod
    def load(cls, path) -> "GoalAssociator":
        arrays, meta = load_arrays(path)
        net = cls(np.random.default_rng(0), meta["embed_dim"], meta["n_goals"],
                  meta["hidden"], meta["naive"], meta=meta)
        _restore(net, arrays)
        return net


class LocalizationNet(nn.Module):
    """Siamese adjacency scorer; one weight-shared branch per frame."""

    def __init__(self, rng: np.random.Generator, feature_dim: int,
                 key_dim: int = 64, hidden: int = 128, meta: dict | None = None):
        self.branch = nn.MLP(rng, [feature_dim, hidden, key_dim])
        self.head = nn.MLP(rng, [2 * key_dim, 64, 1])
        self.feature_dim = feature_dim
        self.key_dim = key_dim
        self.hidden = hidden
        self.meta = dict(meta or {})

    def embed(self, frames: Tensor) -> Tensor:
        return self.branch(frames)

    def embed_numpy(self, frames: np.ndarray) -> np.ndarray:
        return self.embed(Tensor(np.atleast_2d(frames))).data

    def pair_logits(self, emb_a: Tensor, emb_b: Tensor) -> Tensor:
        # symmetric combiners only, so score(a, b) == score(b, a) exactly
        diff = _abs(ops.add(emb_a, ops.negate(emb_b)))
        prod = ops.multiply(emb_a, emb_b)
        return self.head(ops.concat([diff, prod], axis=1))

    def score_keys(self, query_key: np.ndarray, keys: np.ndarray) -> np.ndarray:
        """Adjacency probability of one query embedding against many keys."""
        n = keys.shape[0]
        q = np.broadcast_to(query_key, (n, query_key.shape[-1]))
        logits = self.pair_logits(Tensor(np.array(q)), Tensor(keys))
        return ops.sigmoid(logits).data.reshape(-1)

    def score_frames(self, frame_a: np.ndarray, frame_b: np.ndarray) -> float:
        ka = self.embed_numpy(frame_a)
        kb = self.embed_numpy(frame_b)
        return float(self.score_keys(ka[0], kb)[0])

    def save(self, path, extra_meta: dict | None = None):
        meta = {"kind": "localization", "feature_dim": self.feature_dim,
                "key_dim": self.key_dim, "hidden": self.hidden,
                **self.meta, **(extra_meta or {})}
        save_arrays(path, {k: p.data for k, p in self.named_parameters()}, meta)

    @classmethod
    def load(cls, path) -> "LocalizationNet":
        arrays, meta = load_arrays(path)
        net = cls(np.random.default_rng(0), meta["feature_dim"], meta["key_dim"],
                  meta["hidden"], meta=meta)
        _restore(net, arrays)
        return net


def _restore(module: nn.Module, arrays: dict[str, np.ndarray]) -> None:
    params = dict(module.named_parameters())
    if set(params) != set(arrays):
        missing = set(params).symmetric_difference(arrays)
        raise ValueError(f"checkpoint does not match architecture: {sorted(missing)}")
    for name, tensor in params.items():
        if tensor.data.shape != arrays[name].shape:
            raise ValueError(f"shape mismatch for {name}")
        tensor.data[...] = arrays[name]
