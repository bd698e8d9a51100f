"""Minimal dense-network kernel: forward, hand-derived backprop, OGD, Adam.

Every trainable model in the package (feature extractors, server head,
denoising autoencoders, actor, critic) is a :class:`DenseNet`.  Nets are
value objects: training steps return a fresh net and never touch the
input, so round-start snapshots stay valid while blocks update in
parallel.  All arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from daovfl import backend
from daovfl.backend import ACT_CODES
from daovfl.errors import DimensionError, DomainError, NumericError

ACTIVATIONS = tuple(ACT_CODES)


def as_matrix(x) -> np.ndarray:
    """Coerce to a C-contiguous float64 matrix."""
    out = np.ascontiguousarray(x, dtype=np.float64)
    if out.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {out.shape}")
    return out


@dataclass
class Layer:
    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    activation: str = "linear"

    def __post_init__(self):
        if self.activation not in ACT_CODES:
            raise DomainError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise DimensionError(
                f"layer shapes disagree: weight {self.weight.shape}, bias {self.bias.shape}"
            )

    @property
    def size(self) -> int:
        return self.weight.size + self.bias.size


@dataclass
class DenseNet:
    layers: list[Layer]

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.weight.shape[1] != nxt.weight.shape[0]:
                raise DimensionError(
                    f"layer widths do not chain: {prev.weight.shape} -> {nxt.weight.shape}"
                )

    @property
    def in_width(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def out_width(self) -> int:
        return self.layers[-1].weight.shape[1]

    @property
    def param_count(self) -> int:
        return sum(layer.size for layer in self.layers)

    def copy(self) -> "DenseNet":
        return DenseNet(
            [Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers]
        )


@dataclass
class GradBundle:
    """Per-layer gradients, shape-congruent with one DenseNet."""

    dw: list[np.ndarray]
    db: list[np.ndarray]

    @classmethod
    def zeros_like(cls, net: DenseNet) -> "GradBundle":
        return cls(
            [np.zeros_like(l.weight) for l in net.layers],
            [np.zeros_like(l.bias) for l in net.layers],
        )

    def add(self, other: "GradBundle") -> None:
        for a, b in zip(self.dw, other.dw):
            a += b
        for a, b in zip(self.db, other.db):
            a += b

    def flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.dw, self.db):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)


def _check_congruent(net: DenseNet, grads: GradBundle) -> None:
    if len(grads.dw) != len(net.layers) or len(grads.db) != len(net.layers):
        raise DimensionError("gradient bundle does not match net layer count")
    for layer, dw, db in zip(net.layers, grads.dw, grads.db):
        if dw.shape != layer.weight.shape or db.shape != layer.bias.shape:
            raise DimensionError(
                f"gradient shapes {dw.shape}/{db.shape} do not match layer "
                f"{layer.weight.shape}/{layer.bias.shape}"
            )


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def dense_net(widths, activations, rng: np.random.Generator) -> DenseNet:
    """Build a net with glorot-uniform weights and zero biases.

    `widths` has length L+1; `activations` is one tag applied to every
    layer or a sequence of L tags.
    """
    widths = list(widths)
    if len(widths) < 2:
        raise DimensionError("need at least an input and an output width")
    n_layers = len(widths) - 1
    if isinstance(activations, str):
        activations = [activations] * n_layers
    if len(activations) != n_layers:
        raise DimensionError(f"expected {n_layers} activation tags")
    layers = [
        Layer(glorot_uniform(i, o, rng), np.zeros(o), act)
        for i, o, act in zip(widths[:-1], widths[1:], activations)
    ]
    return DenseNet(layers)


def mlp_forward(net: DenseNet, x) -> list[np.ndarray]:
    """Forward pass; returns [input, layer-1 output, ..., final output]."""
    a = as_matrix(x)
    if a.shape[1] != net.in_width:
        raise DimensionError(
            f"input width {a.shape[1]} does not match net input {net.in_width}"
        )
    acts = [a]
    for layer in net.layers:
        a = backend.layer_forward(a, layer.weight, layer.bias, ACT_CODES[layer.activation])
        acts.append(a)
    return acts


def mlp_backward(net: DenseNet, acts: list[np.ndarray], upstream) -> tuple[GradBundle, np.ndarray]:
    """Backprop through the net given its forward activation record.

    `upstream` is dLoss/d(output).  Returns the parameter gradients and
    the gradient with respect to the input.
    """
    grad = as_matrix(upstream)
    if grad.shape != acts[-1].shape:
        raise DimensionError(
            f"upstream shape {grad.shape} does not match output {acts[-1].shape}"
        )
    dw: list[np.ndarray] = [None] * len(net.layers)
    db: list[np.ndarray] = [None] * len(net.layers)
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        dw[i], db[i], grad = backend.layer_backward(
            acts[i], acts[i + 1], layer.weight, ACT_CODES[layer.activation], grad
        )
    return GradBundle(dw, db), grad


def ogd_step(net: DenseNet, grads: GradBundle, eta: float) -> DenseNet:
    """One online-gradient-descent step: p <- p - eta * g."""
    if not (np.isfinite(eta) and eta >= 0.0):
        raise NumericError(f"learning rate must be finite and >= 0, got {eta}")
    _check_congruent(net, grads)
    out = net.copy()
    for layer, dw, db in zip(out.layers, grads.dw, grads.db):
        if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(db))):
            raise NumericError("non-finite gradient in ogd_step")
        backend.sgd_update(layer.weight.reshape(-1), dw.reshape(-1), eta)
        backend.sgd_update(layer.bias, db, eta)
    return out


@dataclass
class AdamState:
    """First/second moment buffers plus the shared step counter."""

    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, net: DenseNet) -> "AdamState":
        return cls(
            [np.zeros_like(l.weight) for l in net.layers],
            [np.zeros_like(l.weight) for l in net.layers],
            [np.zeros_like(l.bias) for l in net.layers],
            [np.zeros_like(l.bias) for l in net.layers],
        )


def adam_step(
    net: DenseNet,
    grads: GradBundle,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> DenseNet:
    """One Adam step with bias correction.  Moments update in place."""
    if not (np.isfinite(lr) and lr > 0.0):
        raise NumericError(f"learning rate must be finite and > 0, got {lr}")
    _check_congruent(net, grads)
    state.t += 1
    out = net.copy()
    for i, layer in enumerate(out.layers):
        if not (np.all(np.isfinite(grads.dw[i])) and np.all(np.isfinite(grads.db[i]))):
            raise NumericError("non-finite gradient in adam_step")
        backend.adam_update(
            layer.weight.reshape(-1), grads.dw[i].reshape(-1),
            state.m_w[i].reshape(-1), state.v_w[i].reshape(-1),
            lr, beta1, beta2, eps, state.t,
        )
        backend.adam_update(
            layer.bias, grads.db[i], state.m_b[i], state.v_b[i],
            lr, beta1, beta2, eps, state.t,
        )
    return out


def softmax_xent(logits, labels) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over a batch of class logits.

    Returns (loss, dLoss/dlogits) with grad = (softmax - onehot) / N.
    """
    z = as_matrix(logits)
    y = np.asarray(labels)
    n, c = z.shape
    if y.shape != (n,):
        raise DimensionError(f"labels shape {y.shape} does not match batch {n}")
    if y.min() < 0 or y.max() >= c:
        raise DomainError(f"labels must lie in [0, {c})")
    shifted = z - z.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(logsumexp - shifted[np.arange(n), y]))
    probs = np.exp(shifted - logsumexp[:, None])
    probs[np.arange(n), y] -= 1.0
    return loss, probs / n


def mse_loss(pred, target) -> tuple[float, np.ndarray]:
    """Mean squared error over all entries; grad = 2 * diff / (N * d)."""
    p = as_matrix(pred)
    t = as_matrix(target)
    if p.shape != t.shape:
        raise DimensionError(f"shape mismatch {p.shape} vs {t.shape}")
    diff = p - t
    loss = float(np.mean(diff * diff))
    return loss, (2.0 / diff.size) * diff
