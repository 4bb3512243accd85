"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every value in this package is a :class:`Tensor` wrapping a row-major
float64 numpy array.  Operations executed while a :class:`Tape` is active
append a backward record; ``Tape.backward`` replays the records in exact
reverse application order and accumulates gradients into every tensor
that requires them.  One tape per forward pass; tapes are never shared
across threads.
"""

from __future__ import annotations

import numpy as np


class GradcoreError(Exception):
    """Contract violation inside the tensor engine."""


class ShapeError(GradcoreError, ValueError):
    """Operands do not conform; message names the op and the shapes."""


class Tensor:
    """A dense float64 array, optionally tracking a gradient buffer.

    ``grad`` is allocated (as zeros) whenever ``requires_grad`` is true, so
    parameters that a loss never touches legitimately report a zero
    gradient instead of a missing one.
    """

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(arr) if requires_grad else None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise GradcoreError(f"item() on non-scalar tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def detach(self) -> "Tensor":
        """A requires_grad=False view of the same values (copied)."""
        return Tensor(self.data.copy())

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


_TAPE_STACK: list["Tape"] = []


def active_tape() -> "Tape | None":
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tape:
    """Ordered record of applied operations for one forward pass.

    Used as a context manager::

        with Tape() as tape:
            loss = ops.mean(ops.relu(ops.matmul(x, w)))
        tape.backward(loss)

    Ops executed outside any tape run forward-only, which is how
    inference avoids bookkeeping cost.
    """

    def __init__(self):
        self._records: list = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _TAPE_STACK.pop()
        if popped is not self:  # pragma: no cover - stack discipline bug
            raise GradcoreError("tape stack corrupted")
        return False

    def record(self, backward_fn) -> None:
        self._records.append(backward_fn)

    def __len__(self) -> int:
        return len(self._records)

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(tensor) into every recorded tensor's grad.

        ``loss`` must be a scalar (size 1) produced under this tape.
        """
        if loss.data.size != 1:
            raise GradcoreError(
                f"backward requires a scalar loss, got shape {loss.shape}"
            )
        if not self._records:
            raise GradcoreError("backward on an empty tape")
        if loss.grad is None:
            loss.grad = np.zeros_like(loss.data)
        loss.grad += 1.0
        for backward_fn in reversed(self._records):
            backward_fn()


def ensure_grad_buffer(t: Tensor) -> np.ndarray:
    """Gradient buffer for an intermediate created under a tape."""
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    return t.grad
