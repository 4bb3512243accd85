"""SGD and Adam-style parameter updates.

Both optimizers consume the grad buffers accumulated by a tape and zero
them after applying the update, so each step sees exactly one backward
pass worth of gradient.
"""

from __future__ import annotations

import numpy as np

from .tensor import GradcoreError, Tensor


class Optimizer:
    def __init__(self, params, learning_rate: float):
        if learning_rate <= 0.0:
            raise GradcoreError(f"learning rate must be positive, got {learning_rate}")
        self.params: list[Tensor] = list(params)
        self.learning_rate = float(learning_rate)
        self.step_count = 0

    def _check_grads(self):
        for p in self.params:
            if p.grad is None:
                raise GradcoreError("optimizer step with a missing gradient buffer")

    def step(self) -> None:
        self._check_grads()
        self.step_count += 1
        self._apply()
        for p in self.params:
            p.zero_grad()

    def _apply(self) -> None:  # pragma: no cover - abstract
        raise NotImplementedError


class SGD(Optimizer):
    def _apply(self):
        for p in self.params:
            p.data -= self.learning_rate * p.grad


class Adam(Optimizer):
    """Adaptive-moment update, beta1=0.9 beta2=0.999 eps=1e-8 by default."""

    def __init__(self, params, learning_rate: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(params, learning_rate)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def _apply(self):
        t = self.step_count
        b1c = 1.0 - self.beta1 ** t
        b2c = 1.0 - self.beta2 ** t
        for p, m, v in zip(self.params, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad ** 2
            p.data -= self.learning_rate * (m / b1c) / (np.sqrt(v / b2c) + self.eps)
