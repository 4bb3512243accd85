"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import GradcoreError, Tape, Tensor

MAX_CHECKED_ENTRIES = 10_000


@dataclass
class GradCheckReport:
    max_rel_error: float
    per_param: dict[str, float]

    def passed(self, tolerance: float) -> bool:
        return self.max_rel_error < tolerance


def _rel_error(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-6)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


def finite_difference_check(loss_fn, named_params, eps: float = 1e-5) -> GradCheckReport:
    """Compare tape gradients of ``loss_fn()`` against central differences.

    ``loss_fn`` must rebuild the forward pass (scalar loss) from the live
    parameter tensors on every call.  Report-only: never raises on
    mismatch, only on contract violations.
    """
    named_params = list(named_params)
    total = sum(p.size for _, p in named_params)
    if total >= MAX_CHECKED_ENTRIES:
        raise GradcoreError(
            f"finite differences over {total} entries exceeds {MAX_CHECKED_ENTRIES}"
        )

    for _, p in named_params:
        p.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    analytic = {name: p.grad.copy() for name, p in named_params}
    for _, p in named_params:
        p.zero_grad()

    per_param: dict[str, float] = {}
    for name, p in named_params:
        numeric = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            up = loss_fn().item()
            flat[i] = original - eps
            down = loss_fn().item()
            flat[i] = original
            num_flat[i] = (up - down) / (2.0 * eps)
        per_param[name] = _rel_error(numeric, analytic[name])

    worst = max(per_param.values()) if per_param else 0.0
    return GradCheckReport(max_rel_error=worst, per_param=per_param)
