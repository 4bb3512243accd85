# The tensor engine: dense float64 arrays, a gradient tape, and optimizers.
# Everything learned in this package (contrastive encoder, discriminators,
# transformer decoder) runs on these pieces.

import numpy as np

from tamplan.gradcore import SGD, Adam, Tape, Tensor, finite_difference_check, nn, ops

# --- forward ops ------------------------------------------------------------
x = Tensor([[1.0, -2.0, 3.0]])
print("relu:", ops.relu(x).data)
print("softmax:", ops.softmax(x, axis=1).data)

# --- reverse-mode gradients ---------------------------------------------------
# ops recorded under a tape can be differentiated; backward walks the records
# in exact reverse order and accumulates into .grad
w = Tensor(np.array([[0.5], [-1.0], [2.0]]), requires_grad=True)
with Tape() as tape:
    y = ops.matmul(x, w)          # (1, 1)
    loss = ops.sum_all(ops.multiply(y, y))
tape.backward(loss)
print("dloss/dw:", w.grad.ravel())          # analytic: 2 * y * x

# --- gradient checking ---------------------------------------------------------
rng = np.random.default_rng(0)
mlp = nn.MLP(rng, [4, 8, 2])
inputs = Tensor(rng.normal(size=(5, 4)))


def loss_fn():
    out = mlp(inputs)
    return ops.mean_all(ops.multiply(out, out))


report = finite_difference_check(loss_fn, mlp.named_parameters())
print(f"finite-difference max relative error: {report.max_rel_error:.2e}")

# --- optimizers -----------------------------------------------------------------
# minimize (x - 3)^2 from 0 with plain SGD
p = Tensor([0.0], requires_grad=True)
opt = SGD([p], learning_rate=0.1)
for _ in range(100):
    with Tape() as tape:
        diff = ops.add(p, Tensor([-3.0]))
        step_loss = ops.sum_all(ops.multiply(diff, diff))
    tape.backward(step_loss)
    opt.step()
print(f"SGD on (x-3)^2 after 100 steps: x = {p.item():.6f}")

# Adam carries per-parameter moments; same interface
q = Tensor([0.0], requires_grad=True)
opt = Adam([q], learning_rate=0.1)
for _ in range(300):
    with Tape() as tape:
        diff = ops.add(q, Tensor([-3.0]))
        step_loss = ops.sum_all(ops.multiply(diff, diff))
    tape.backward(step_loss)
    opt.step()
print(f"Adam after 300 steps: x = {q.item():.6f}")
