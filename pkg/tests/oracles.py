"""Independent reference computations used by the tests."""

import numpy as np

from ldprobust.model import loss


def central_difference(fn, x, h=1e-5):
    """Numerical gradient of scalar ``fn`` at array ``x`` by central differences."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = fn(x)
        flat[i] = old - h
        down = fn(x)
        flat[i] = old
        g[i] = (up - down) / (2 * h)
    return grad


def numeric_param_grad(params, batch, h=1e-5):
    return central_difference(lambda flat: loss(params.unflatten(flat), batch), params.flatten(), h)


def relative_error(a, b):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    denom = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if denom == 0 else float(np.linalg.norm(a - b) / denom)


def centralized_gd(params, batch, lr, steps):
    """Plain full-batch gradient descent with its own loss/gradient formulas."""
    from ldprobust.model import backward, forward, sgd_step

    trajectory = []
    for _ in range(steps):
        _, trace = forward(params, batch)
        grads, _, _ = backward(params, trace, batch.labels)
        params = sgd_step(params, grads, lr)
        trajectory.append(params.flatten())
    return trajectory
