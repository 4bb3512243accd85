"""Differentiable operations over :class:`~tamplan.gradcore.tensor.Tensor`.

Shapes are explicit: the only broadcast anywhere is the bias add of a
``(d,)`` vector onto an ``(n, d)`` matrix.  Gradients are tracked only
while a tape is active; outside a tape every op is a plain forward
computation.
"""

from __future__ import annotations

import numpy as np

from .tensor import GradcoreError, ShapeError, Tensor, active_tape, ensure_grad_buffer


def _result(data, inputs, backward_builder):
    tape = active_tape()
    track = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=track)
    if track:
        tape.record(backward_builder(out))
    return out


def _accum(t: Tensor, contribution) -> None:
    if t.requires_grad:
        ensure_grad_buffer(t)
        t.grad += contribution


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D matrix product."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(a, g @ b.data.T)
            _accum(b, a.data.T @ g)
        return bwd

    return _result(a.data @ b.data, (a, b), build)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; also accepts a (d,) bias against an (n, d) matrix."""
    bias_add = a.data.ndim == 2 and b.data.ndim == 1 and a.shape[1] == b.shape[0]
    if not bias_add and a.shape != b.shape:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape} do not conform")

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(a, g)
            _accum(b, g.sum(axis=0) if bias_add else g)
        return bwd

    return _result(a.data + b.data, (a, b), build)


def multiply(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of same-shape tensors."""
    if a.shape != b.shape:
        raise ShapeError(f"multiply: shapes {a.shape} and {b.shape} differ")

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(a, g * b.data)
            _accum(b, g * a.data)
        return bwd

    return _result(a.data * b.data, (a, b), build)


def relu(x: Tensor) -> Tensor:
    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, g * (x.data > 0.0))
        return bwd

    return _result(np.maximum(x.data, 0.0), (x,), build)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Max-subtracted softmax along ``axis``."""
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            inner = (g * y).sum(axis=axis, keepdims=True)
            _accum(x, (g - inner) * y)
        return bwd

    return _result(y, (x,), build)


def layer_norm(x: Tensor, gain: Tensor | None = None, bias: Tensor | None = None,
               eps: float = 1e-8) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then optionally
    apply a per-feature affine (gain, bias are (d,) parameters)."""
    if x.data.ndim != 2:
        raise ShapeError(f"layer_norm: expected 2-D input, got {x.shape}")
    d = x.shape[1]
    for name, p in (("gain", gain), ("bias", bias)):
        if p is not None and p.shape != (d,):
            raise ShapeError(f"layer_norm: {name} shape {p.shape} != ({d},)")
    mu = x.data.mean(axis=1, keepdims=True)
    var = x.data.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv_std
    y = xhat
    if gain is not None:
        y = y * gain.data
    if bias is not None:
        y = y + bias.data

    inputs = tuple(t for t in (x, gain, bias) if t is not None)

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            gy = g * gain.data if gain is not None else g
            if gain is not None:
                _accum(gain, (g * xhat).sum(axis=0))
            if bias is not None:
                _accum(bias, g.sum(axis=0))
            m1 = gy.mean(axis=1, keepdims=True)
            m2 = (gy * xhat).mean(axis=1, keepdims=True)
            _accum(x, inv_std * (gy - m1 - xhat * m2))
        return bwd

    return _result(y, inputs, build)


def concat(tensors, axis: int = 0) -> Tensor:
    """Concatenate along ``axis``; all other dimensions must match."""
    tensors = list(tensors)
    if not tensors:
        raise GradcoreError("concat of zero tensors")
    ref = list(tensors[0].shape)
    for t in tensors[1:]:
        s = list(t.shape)
        s[axis] = ref[axis]
        if s != ref:
            raise ShapeError(
                f"concat(axis={axis}): shapes {[t.shape for t in tensors]} do not conform"
            )
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            for t, piece in zip(tensors, np.split(g, bounds, axis=axis)):
                _accum(t, piece)
        return bwd

    return _result(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), build)


def take_rows(x: Tensor, ids) -> Tensor:
    """Gather rows of a 2-D tensor; the embedding-lookup primitive."""
    if x.data.ndim != 2:
        raise ShapeError(f"take_rows: expected 2-D table, got {x.shape}")
    idx = np.asarray(ids, dtype=np.int64)
    if idx.ndim != 1:
        raise ShapeError(f"take_rows: indices must be 1-D, got {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
        raise GradcoreError(f"take_rows: index out of range for table {x.shape}")

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            if x.requires_grad:
                ensure_grad_buffer(x)
                np.add.at(x.grad, idx, g)
        return bwd

    return _result(x.data[idx], (x,), build)


embedding_lookup = take_rows


def sum_all(x: Tensor) -> Tensor:
    """Reduce every element to a scalar."""
    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, np.full_like(x.data, float(g)))
        return bwd

    return _result(np.asarray(x.data.sum()), (x,), build)


def mean_all(x: Tensor) -> Tensor:
    n = x.data.size

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, np.full_like(x.data, float(g) / n))
        return bwd

    return _result(np.asarray(x.data.mean()), (x,), build)


def sigmoid(x: Tensor) -> Tensor:
    z = np.exp(-np.abs(x.data))
    y = np.where(x.data >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, g * y * (1.0 - y))
        return bwd

    return _result(y, (x,), build)


def log(x: Tensor) -> Tensor:
    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, g / x.data)
        return bwd

    return _result(np.log(x.data), (x,), build)


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, g * y)
        return bwd

    return _result(y, (x,), build)


def negate(x: Tensor) -> Tensor:
    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, -g)
        return bwd

    return _result(-x.data, (x,), build)


def scale(x: Tensor, c: float) -> Tensor:
    c = float(c)

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, g * c)
        return bwd

    return _result(x.data * c, (x,), build)


def dot(a: Tensor, b: Tensor) -> Tensor:
    """Inner product of two 1-D vectors."""
    if a.data.ndim != 1 or b.data.ndim != 1 or a.shape != b.shape:
        raise ShapeError(f"dot: shapes {a.shape} and {b.shape} do not conform")

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(a, float(g) * b.data)
            _accum(b, float(g) * a.data)
        return bwd

    return _result(np.asarray(a.data @ b.data), (a, b), build)


def transpose(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeError(f"transpose: expected 2-D input, got {x.shape}")

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(x, g.T)
        return bwd

    return _result(x.data.T.copy(), (x,), build)


def l2_normalize(x: Tensor, eps: float = 1e-12) -> Tensor:
    """Scale rows (last axis) to unit Euclidean norm."""
    n = np.sqrt((x.data ** 2).sum(axis=-1, keepdims=True)) + eps
    y = x.data / n

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            inner = (g * y).sum(axis=-1, keepdims=True)
            _accum(x, (g - y * inner) / n)
        return bwd

    return _result(y, (x,), build)


def bce_with_logits(logits: Tensor, targets: Tensor) -> Tensor:
    """Mean binary cross-entropy, computed stably from logits.

    ``targets`` is treated as a constant; gradients flow into ``logits`` only.
    """
    if logits.shape != targets.shape:
        raise ShapeError(
            f"bce_with_logits: shapes {logits.shape} and {targets.shape} differ"
        )
    x, y = logits.data, targets.data
    per_elem = np.maximum(x, 0.0) - x * y + np.log1p(np.exp(-np.abs(x)))
    n = x.size
    p = np.where(x >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                 np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

    def build(out):
        def bwd():
            g = out.grad
            if g is None:
                return
            _accum(logits, float(g) * (p - y) / n)
        return bwd

    return _result(np.asarray(per_elem.mean()), (logits,), build)


_DISPATCH = {
    "matmul": matmul,
    "add": add,
    "multiply": multiply,
    "relu": relu,
    "softmax": softmax,
    "layer_norm": layer_norm,
    "concat": concat,
    "embedding_lookup": embedding_lookup,
    "mean": mean_all,
    "sum": sum_all,
    "sigmoid": sigmoid,
    "log": log,
    "exp": exp,
    "negate": negate,
    "scale": scale,
    "dot": dot,
    "transpose": transpose,
    "l2_normalize": l2_normalize,
    "bce_with_logits": bce_with_logits,
}


def forward_op(kind: str, *inputs, **kwargs) -> Tensor:
    """Apply an op by name; unknown kinds raise GradcoreError."""
    try:
        fn = _DISPATCH[kind]
    except KeyError:
        raise GradcoreError(f"unknown op kind {kind!r}") from None
    return fn(*inputs, **kwargs)
