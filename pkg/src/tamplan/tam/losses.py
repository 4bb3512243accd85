"""Batched supervised InfoNCE over unit-norm projections.

For anchor i with positives Pos(i) (same action label, self excluded) and
candidates A(i) (everyone but self), the loss is

    sum_i  -1/|Pos(i)|  sum_{p in Pos(i)}  log  exp(z_i . z_p / tau)
                                               -----------------------
                                               sum_{a in A(i)} exp(z_i . z_a / tau)

Anchors with no positive in the batch contribute nothing and are counted.
"""

from __future__ import annotations

import numpy as np

from ..gradcore import Tensor, ops

NEG_INF_MASK = -1e9


def supervised_infonce(z: Tensor, labels, tau: float) -> tuple[Tensor, int, int]:
    """Return (total loss over anchors, anchors used, anchors skipped)."""
    n = z.shape[0]
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} != ({n},)")
    if n < 2:
        raise ValueError("InfoNCE needs at least two batch members")

    sims = ops.scale(ops.matmul(z, ops.transpose(z)), 1.0 / tau)

    # self-exclusion and max-subtraction live in constant tensors: neither
    # changes the gradient of the surviving terms
    mask_self = np.full((n, n), 0.0)
    np.fill_diagonal(mask_self, NEG_INF_MASK)
    masked = ops.add(sims, Tensor(mask_self))
    row_max = masked.data.max(axis=1, keepdims=True)
    shifted = ops.add(masked, Tensor(np.broadcast_to(-row_max, (n, n)).copy()))

    expd = ops.exp(shifted)
    row_sums = ops.matmul(expd, Tensor(np.ones((n, 1))))
    log_den = ops.matmul(ops.log(row_sums), Tensor(np.ones((1, n))))
    log_probs = ops.add(shifted, ops.negate(log_den))

    same = labels[:, None] == labels[None, :]
    np.fill_diagonal(same, False)
    pos_counts = same.sum(axis=1)
    used = int((pos_counts > 0).sum())
    skipped = n - used
    weights = np.zeros((n, n))
    nonzero = pos_counts > 0
    weights[nonzero] = same[nonzero] / pos_counts[nonzero, None]

    loss = ops.negate(ops.sum_all(ops.multiply(log_probs, Tensor(weights))))
    return loss, used, skipped
