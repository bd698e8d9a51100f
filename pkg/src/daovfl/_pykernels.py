"""NumPy implementations of the dense-layer hot-path kernels.

This is the reference backend; ``daovfl._cykernels`` is a compiled twin
with the same call contract.  ``daovfl.backend`` picks one at import time.
All arrays are float64 and C-contiguous.
"""

import numpy as np

LINEAR, RELU, TANH, SIGMOID = 0, 1, 2, 3


def layer_forward(x, w, b, act):
    """act(x @ w + b) for one dense layer."""
    z = x @ w
    z += b
    if act == RELU:
        np.maximum(z, 0.0, out=z)
    elif act == TANH:
        np.tanh(z, out=z)
    elif act == SIGMOID:
        np.negative(z, out=z)
        np.exp(z, out=z)
        z += 1.0
        np.reciprocal(z, out=z)
    return z


def layer_backward(x, a, w, act, upstream):
    """Gradients of one dense layer.

    `a` is the layer's own output (post-activation), `upstream` is
    dLoss/da.  Returns (dw, db, dx).
    """
    if act == LINEAR:
        dz = upstream
    elif act == RELU:
        dz = upstream * (a > 0.0)
    elif act == TANH:
        dz = upstream * (1.0 - a * a)
    else:
        dz = upstream * (a * (1.0 - a))
    dw = x.T @ dz
    db = dz.sum(axis=0)
    dx = dz @ w.T
    return dw, db, dx


def sgd_update(p, g, eta):
    """In-place p -= eta * g on flat views."""
    p -= eta * g


def adam_update(p, g, m, v, lr, beta1, beta2, eps, t):
    """In-place adaptive-moment update with bias correction; t >= 1."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)


def quantize_midtread(x, a, levels):
    """Clip to [-a, a] and snap to the nearest of `levels` uniform levels.

    The grid includes both endpoints; ties round toward +inf.
    """
    step = 2.0 * a / (levels - 1)
    q = np.floor((np.clip(x, -a, a) + a) / step + 0.5)
    return q * step - a
