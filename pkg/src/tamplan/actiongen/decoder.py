"""Autoregressive planners: a small causal transformer decoder with memory
cross-attention, and the linear short-horizon head used by one ablation.

Sequence layout: position 0 holds the goal embedding with a fixed
positional vector; positions 1..t hold the action history with sinusoidal
positional embeddings by step index.  Retrieved memory slots are a set:
cross-attention reads them with no positional encoding, so slot order
cannot influence the output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gradcore import Tensor, load_arrays, nn, ops, save_arrays

ATTN_MASK = -1e9


def sinusoidal_table(n_positions: int, dim: int) -> np.ndarray:
    table = np.zeros((n_positions, dim))
    pos = np.arange(n_positions)[:, None]
    idx = np.arange(0, dim, 2)[None, :]
    angles = pos / np.power(10000.0, idx / dim)
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    return table


@dataclass
class DecoderConfig:
    vocab_size: int
    n_goals: int
    model_dim: int = 64
    heads: int = 4
    layers: int = 2
    max_len: int = 24
    ffn_dim: int = 128
    memory_value_dim: int = 128
    use_memory: bool = True
    use_goal: bool = True

    def __post_init__(self):
        if self.model_dim % self.heads != 0:
            raise ValueError("model dim must be divisible by head count")


class Attention(nn.Module):
    """Multi-head scaled dot-product attention; per-head projections are
    separate Linear layers whose outputs concatenate back to model_dim."""

    def __init__(self, rng, query_dim, source_dim, model_dim, heads):
        head_dim = model_dim // heads
        self.q = [nn.Linear(rng, query_dim, head_dim) for _ in range(heads)]
        self.k = [nn.Linear(rng, source_dim, head_dim) for _ in range(heads)]
        self.v = [nn.Linear(rng, source_dim, head_dim) for _ in range(heads)]
        self.out = nn.Linear(rng, model_dim, model_dim)
        self._scale = 1.0 / np.sqrt(head_dim)

    def __call__(self, x: Tensor, source: Tensor, mask: Tensor | None = None) -> Tensor:
        heads = []
        for hq, hk, hv in zip(self.q, self.k, self.v):
            scores = ops.scale(ops.matmul(hq(x), ops.transpose(hk(source))),
                               self._scale)
            if mask is not None:
                scores = ops.add(scores, mask)
            heads.append(ops.matmul(ops.softmax(scores, axis=1), hv(source)))
        return self.out(ops.concat(heads, axis=1))


class _LayerNormParams(nn.Module):
    def __init__(self, dim):
        self.gain = Tensor(np.ones(dim), requires_grad=True)
        self.bias = Tensor(np.zeros(dim), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gain, self.bias)


class DecoderLayer(nn.Module):
    def __init__(self, rng, config: DecoderConfig):
        d = config.model_dim
        self.ln_self = _LayerNormParams(d)
        self.self_attn = Attention(rng, d, d, d, config.heads)
        if config.use_memory:
            self.ln_cross = _LayerNormParams(d)
            self.cross_attn = Attention(rng, d, config.memory_value_dim, d,
                                        config.heads)
        self.ln_ffn = _LayerNormParams(d)
        self.ffn_in = nn.Linear(rng, d, config.ffn_dim)
        self.ffn_out = nn.Linear(rng, config.ffn_dim, d)
        self._use_memory = config.use_memory

    def __call__(self, x: Tensor, mask: Tensor, memory: Tensor | None) -> Tensor:
        normed = self.ln_self(x)
        x = ops.add(x, self.self_attn(normed, normed, mask))
        if self._use_memory and memory is not None:
            x = ops.add(x, self.cross_attn(self.ln_cross(x), memory))
        x = ops.add(x, self.ffn_out(ops.relu(self.ffn_in(self.ln_ffn(x)))))
        return x


class TransformerPlanner(nn.Module):
    """Next-action distribution from goal, action history, and retrieved memory."""

    def __init__(self, rng, config: DecoderConfig, meta: dict | None = None):
        self.config = config
        d = config.model_dim
        self.token_embed = nn.Embedding(rng, config.vocab_size, d)
        if config.use_goal:
            self.goal_embed = nn.Embedding(rng, config.n_goals, d)
        self.layers = [DecoderLayer(rng, config) for _ in range(config.layers)]
        self.ln_final = _LayerNormParams(d)
        self.out = nn.Linear(rng, d, config.vocab_size)
        # damped output projection keeps the initial distribution near uniform
        self.out.weight.data *= 0.1
        # history uses rows 0..max_len-1; the goal slot's vector is fixed
        pos = sinusoidal_table(config.max_len + 1, d)
        self._pos_history = pos[:config.max_len]
        self._pos_goal = pos[config.max_len]
        self.meta = dict(meta or {})

    def forward_positions(self, goal_id: int, history_ids, memory_values) -> Tensor:
        """Logits at every sequence position (goal slot first)."""
        history_ids = list(history_ids)
        if len(history_ids) >= self.config.max_len:
            raise ValueError(
                f"history length {len(history_ids)} >= max {self.config.max_len}"
            )
        if self.config.use_goal:
            goal_row = ops.take_rows(self.goal_embed.table, [int(goal_id)])
        else:
            goal_row = Tensor(np.zeros((1, self.config.model_dim)))
        goal_row = ops.add(goal_row, Tensor(self._pos_goal[None, :].copy()))
        rows = [goal_row]
        if history_ids:
            tok = ops.take_rows(self.token_embed.table, history_ids)
            rows.append(ops.add(tok, Tensor(self._pos_history[:len(history_ids)].copy())))
        x = ops.concat(rows, axis=0) if len(rows) > 1 else rows[0]

        n = len(history_ids) + 1
        mask = Tensor(np.triu(np.full((n, n), ATTN_MASK), k=1))
        memory = None
        if self.config.use_memory and memory_values is not None and len(memory_values):
            memory = memory_values if isinstance(memory_values, Tensor) \
                else Tensor(np.asarray(memory_values))
        for layer in self.layers:
            x = layer(x, mask, memory)
        return self.out(self.ln_final(x))

    def next_distribution(self, goal_id: int, history_ids, memory_values) -> np.ndarray:
        """Probability vector over the vocabulary for the next action."""
        logits = self.forward_positions(goal_id, history_ids, memory_values)
        row = logits.data[-1]
        e = np.exp(row - row.max())
        return e / e.sum()

    def save(self, path, extra_meta: dict | None = None):
        cfg = self.config
        meta = {"kind": "decoder", "vocab_size": cfg.vocab_size,
                "n_goals": cfg.n_goals, "model_dim": cfg.model_dim,
                "heads": cfg.heads, "layers": cfg.layers, "max_len": cfg.max_len,
                "ffn_dim": cfg.ffn_dim, "memory_value_dim": cfg.memory_value_dim,
                "use_memory": cfg.use_memory, "use_goal": cfg.use_goal,
                **self.meta, **(extra_meta or {})}
        save_arrays(path, {k: p.data for k, p in self.named_parameters()}, meta)

    @classmethod
    def load(cls, path) -> "TransformerPlanner":
        arrays, meta = load_arrays(path)
        config = DecoderConfig(
            vocab_size=meta["vocab_size"], n_goals=meta["n_goals"],
            model_dim=meta["model_dim"], heads=meta["heads"], layers=meta["layers"],
            max_len=meta["max_len"], ffn_dim=meta["ffn_dim"],
            memory_value_dim=meta["memory_value_dim"],
            use_memory=meta["use_memory"], use_goal=meta["use_goal"])
        net = cls(np.random.default_rng(0), config, meta=meta)
        _restore(net, arrays)
        return net


class LinearPlanner(nn.Module):
    """Short-horizon ablation: one linear layer over goal embedding and the
    mean of retrieved memory values; ignores the action history entirely."""

    GOAL_DIM = 32

    def __init__(self, rng, vocab_size: int, n_goals: int,
                 memory_value_dim: int = 128, meta: dict | None = None):
        self.goal_embed = nn.Embedding(rng, n_goals, self.GOAL_DIM)
        self.head = nn.Linear(rng, self.GOAL_DIM + memory_value_dim, vocab_size)
        self.vocab_size = vocab_size
        self.n_goals = n_goals
        self.memory_value_dim = memory_value_dim
        self.config = DecoderConfig(vocab_size=vocab_size, n_goals=n_goals,
                                    max_len=10_000, use_memory=True)
        self.meta = dict(meta or {})

    def _features(self, goal_id: int, memory_values) -> Tensor:
        goal = ops.take_rows(self.goal_embed.table, [int(goal_id)])
        if memory_values is not None and len(memory_values):
            mean = np.asarray(memory_values).mean(axis=0, keepdims=True)
        else:
            mean = np.zeros((1, self.memory_value_dim))
        return ops.concat([goal, Tensor(mean)], axis=1)

    def logits_for(self, goal_id: int, memory_values) -> Tensor:
        return self.head(self._features(goal_id, memory_values))

    def next_distribution(self, goal_id: int, history_ids, memory_values) -> np.ndarray:
        row = self.logits_for(goal_id, memory_values).data[0]
        e = np.exp(row - row.max())
        return e / e.sum()

    def save(self, path, extra_meta: dict | None = None):
        meta = {"kind": "linear_head", "vocab_size": self.vocab_size,
                "n_goals": self.n_goals, "memory_value_dim": self.memory_value_dim,
                **self.meta, **(extra_meta or {})}
        save_arrays(path, {k: p.data for k, p in self.named_parameters()}, meta)

    @classmethod
    def load(cls, path) -> "LinearPlanner":
        arrays, meta = load_arrays(path)
        net = cls(np.random.default_rng(0), meta["vocab_size"], meta["n_goals"],
                  meta["memory_value_dim"], meta=meta)
        _restore(net, arrays)
        return net


def _restore(module, arrays):
    params = dict(module.named_parameters())
    if set(params) != set(arrays):
        missing = set(params).symmetric_difference(arrays)
        raise ValueError(f"checkpoint does not match architecture: {sorted(missing)}")
    for name, tensor in params.items():
        tensor.data[...] = arrays[name]


def cross_entropy_row(logits_row: Tensor, target_id: int, vocab_size: int) -> Tensor:
    """Stable -log softmax(logits)[target] for a (1, V) logits row."""
    row_max = float(logits_row.data.max())
    shifted = ops.add(logits_row, Tensor(np.full((1, vocab_size), -row_max)))
    expd = ops.exp(shifted)
    log_den = ops.log(ops.matmul(expd, Tensor(np.ones((vocab_size, 1)))))
    onehot = np.zeros((1, vocab_size))
    onehot[0, target_id] = 1.0
    picked = ops.sum_all(ops.multiply(shifted, Tensor(onehot)))
    return ops.add(ops.negate(picked), ops.sum_all(log_den))
