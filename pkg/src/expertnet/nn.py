"""Minimal dense-network engine.

Forward evaluation, reverse-mode gradients, cross-entropy on hard or soft
targets, and SGD with momentum, weight decay and step learning-rate decay.
Parameters are plain float64 numpy arrays mutated in place by the optimizer;
everything else is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, NumericError
from .seeding import STREAM_SHUFFLE, derive_rng

LOG_EPS = 1e-12  # clamp inside logarithms

ACTIVATION_KINDS = ("relu", "leaky-relu", "sigmoid", "softmax")


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction so large logits cannot overflow."""
    z = np.asarray(logits, dtype=float)
    if z.size == 0:
        raise DimensionError("softmax: empty input")
    if not np.all(np.isfinite(z)):
        raise NumericError("softmax: non-finite logits")
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(target: np.ndarray, prediction: np.ndarray) -> float:
    """-sum(target * ln(max(prediction, eps))), averaged over rows if 2-D.

    Argument order is (target, prediction); soft targets are allowed.
    """
    t = np.asarray(target, dtype=float)
    p = np.asarray(prediction, dtype=float)
    if t.shape != p.shape:
        raise DimensionError(f"cross_entropy: target shape {t.shape} vs prediction {p.shape}")
    per_row = -(t * np.log(np.maximum(p, LOG_EPS))).sum(axis=-1)
    return float(np.mean(per_row))


class Dense:
    """Affine layer y = x @ W.T + b with weight (out, in) and bias (out,)."""

    kind = "dense"

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        weight = np.asarray(weight, dtype=float)
        bias = np.asarray(bias, dtype=float)
        if weight.ndim != 2 or bias.ndim != 1 or weight.shape[0] != bias.shape[0]:
            raise DimensionError(
                f"dense: weight {weight.shape} and bias {bias.shape} are inconsistent"
            )
        self.weight = weight
        self.bias = bias

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    def apply(self, x):
        return x @ self.weight.T + self.bias

    def backward(self, x, out, grad_out):
        grad_x = grad_out @ self.weight
        return grad_x, [grad_out.T @ x, grad_out.sum(axis=0)]

    def parameters(self):
        return [self.weight, self.bias]


class Activation:
    """Parameter-free nonlinearity: relu, leaky-relu, sigmoid, or softmax."""

    def __init__(self, kind: str, slope: float = 0.01):
        if kind not in ACTIVATION_KINDS:
            raise ConfigurationError(f"unknown activation kind {kind!r}")
        if kind == "leaky-relu" and not 0.0 < slope < 1.0:
            raise ConfigurationError(f"leaky-relu slope must be in (0, 1), got {slope}")
        self.kind = kind
        self.slope = float(slope)

    def apply(self, x):
        if self.kind == "relu":
            return np.maximum(x, 0.0)
        if self.kind == "leaky-relu":
            return np.where(x > 0.0, x, self.slope * x)
        if self.kind == "sigmoid":
            # split by sign to avoid exp overflow
            out = np.empty_like(x)
            pos = x >= 0
            out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
            ex = np.exp(x[~pos])
            out[~pos] = ex / (1.0 + ex)
            return out
        return softmax(x)

    def backward(self, x, out, grad_out):
        if self.kind == "relu":
            return np.where(x > 0.0, grad_out, 0.0), []
        if self.kind == "leaky-relu":
            return np.where(x > 0.0, grad_out, self.slope * grad_out), []
        if self.kind == "sigmoid":
            return out * (1.0 - out) * grad_out, []
        # softmax rows couple: dL/dz = a * (g - sum(a * g))
        dot = (out * grad_out).sum(axis=-1, keepdims=True)
        return out * (grad_out - dot), []

    def parameters(self):
        return []


class Network:
    """Ordered stack of layers whose dense dimensions chain correctly."""

    def __init__(self, layers):
        layers = list(layers)
        if not any(layer.kind == "dense" for layer in layers):
            raise ConfigurationError("network needs at least one dense layer")
        width = None
        for layer in layers:
            if layer.kind == "dense":
                if width is not None and layer.in_dim != width:
                    raise DimensionError(
                        f"layer expects width {layer.in_dim} but receives {width}"
                    )
                width = layer.out_dim
        self.layers = layers
        self.input_dim = next(l.in_dim for l in layers if l.kind == "dense")
        self.output_dim = width

    def parameters(self):
        params = []
        for layer in self.layers:
            params.extend(layer.parameters())
        return params

    @property
    def terminal_kind(self) -> str:
        return self.layers[-1].kind


def forward(net: Network, batch) -> tuple[np.ndarray, list[np.ndarray]]:
    """Evaluate the network on a (B, in) batch.

    Returns the (B, out) output and the list of per-layer activations
    (input first, output last), which backward passes reuse.
    """
    x = np.atleast_2d(np.asarray(batch, dtype=float))
    if x.shape[1] != net.input_dim:
        raise DimensionError(f"batch width {x.shape[1]} != network input dim {net.input_dim}")
    acts = [x]
    for layer in net.layers:
        acts.append(layer.apply(acts[-1]))
    out = acts[-1]
    if not np.all(np.isfinite(out)):
        raise NumericError("network produced non-finite outputs")
    return out, acts


class CrossEntropyLoss:
    """Mean cross-entropy of predictions against (possibly soft) target rows."""

    kind = "cross-entropy"

    def value(self, prediction, target) -> float:
        return cross_entropy(target, prediction)

    def prediction_grad(self, prediction, target):
        n = prediction.shape[0]
        clamped = np.maximum(prediction, LOG_EPS)
        # entries at the clamp floor have zero local derivative
        return np.where(prediction > LOG_EPS, -target / clamped, 0.0) / n


class ForwardCorrectedLoss:
    """Cross-entropy of noisy targets against matrix-mixed predictions.

    The prediction rows are pushed through a row-stochastic transition matrix
    (out_j = sum_i T[i, j] * pred_i) before the usual cross-entropy, so the
    model is scored on the noisy-label distribution it should induce.
    """

    kind = "forward-corrected"

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"transition matrix must be square, got {matrix.shape}")
        if not np.allclose(matrix.sum(axis=1), 1.0, atol=1e-9):
            raise ConfigurationError("transition matrix rows must sum to 1")
        self.matrix = matrix

    def value(self, prediction, target) -> float:
        return cross_entropy(target, prediction @ self.matrix)

    def prediction_grad(self, prediction, target):
        mixed = prediction @ self.matrix
        n = prediction.shape[0]
        g_mixed = np.where(mixed > LOG_EPS, -target / np.maximum(mixed, LOG_EPS), 0.0) / n
        return g_mixed @ self.matrix.T


def resolve_loss(loss):
    if isinstance(loss, (CrossEntropyLoss, ForwardCorrectedLoss)):
        return loss
    if loss == "cross-entropy":
        return CrossEntropyLoss()
    if loss == "forward-corrected":
        raise ConfigurationError("forward-corrected loss needs a matrix; pass ForwardCorrectedLoss(T)")
    raise ConfigurationError(f"unknown loss kind {loss!r}")


def loss_and_gradients(net: Network, batch, targets, loss):
    """Mean-over-batch loss value and its gradient for every parameter.

    Gradients are returned as a flat list aligned with net.parameters().
    """
    loss = resolve_loss(loss)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    out, acts = forward(net, batch)
    if targets.shape != out.shape:
        raise DimensionError(f"targets shape {targets.shape} != output shape {out.shape}")
    value = loss.value(out, targets)
    if not np.isfinite(value):
        raise NumericError(f"non-finite loss value {value!r}")
    grad = loss.prediction_grad(out, targets)
    grads: list[np.ndarray] = []
    for i in reversed(range(len(net.layers))):
        grad, layer_grads = net.layers[i].backward(acts[i], acts[i + 1], grad)
        grads[:0] = layer_grads
    return value, grads


def gradients(net: Network, batch, targets, loss):
    return loss_and_gradients(net, batch, targets, loss)[1]


@dataclass
class SgdState:
    """Per-parameter velocity plus the fixed momentum / weight-decay settings."""

    velocity: list
    momentum: float = 0.9
    weight_decay: float = 1e-4

    def __post_init__(self):
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigurationError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0.0:
            raise ConfigurationError(f"weight decay must be >= 0, got {self.weight_decay}")

    @classmethod
    def for_network(cls, net: Network, momentum: float = 0.9, weight_decay: float = 1e-4):
        return cls([np.zeros_like(p) for p in net.parameters()], momentum, weight_decay)


def sgd_step(params, grads, state: SgdState, lr: float):
    """v <- momentum*v + (grad + weight_decay*param); param <- param - lr*v.

    Mutates the parameter arrays and the velocity in place.
    """
    if lr < 0.0:
        raise ConfigurationError(f"learning rate must be >= 0, got {lr}")
    if not (len(params) == len(grads) == len(state.velocity)):
        raise DimensionError("params, grads and velocity lists differ in length")
    for p, g, v in zip(params, grads, state.velocity):
        if p.shape != g.shape or p.shape != v.shape:
            raise DimensionError(f"shape mismatch: param {p.shape}, grad {g.shape}, velocity {v.shape}")
        v *= state.momentum
        v += g + state.weight_decay * p
        p -= lr * v


@dataclass(frozen=True)
class StepDecay:
    """Learning rate base_lr * factor**(epoch // period); period None = constant."""

    base_lr: float
    factor: float = 0.1
    period: int | None = None

    def __post_init__(self):
        if self.base_lr <= 0.0:
            raise ConfigurationError(f"base learning rate must be > 0, got {self.base_lr}")
        if self.factor <= 0.0:
            raise ConfigurationError(f"decay factor must be > 0, got {self.factor}")
        if self.period is not None and self.period < 1:
            raise ConfigurationError(f"decay period must be >= 1, got {self.period}")


def lr_at(schedule: StepDecay, epoch: int) -> float:
    if epoch < 0:
        raise ConfigurationError(f"epoch must be >= 0, got {epoch}")
    if schedule.period is None:
        return schedule.base_lr
    return schedule.base_lr * schedule.factor ** (epoch // schedule.period)


def glorot_dense(in_dim: int, out_dim: int, rng: np.random.Generator) -> Dense:
    # uniform +-sqrt(6/(fan_in+fan_out)), biases zero
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    return Dense(rng.uniform(-limit, limit, size=(out_dim, in_dim)), np.zeros(out_dim))


def mlp(dims, hidden: str = "relu", terminal: str = "softmax",
        leaky_slope: float = 0.01, rng: np.random.Generator | None = None) -> Network:
    """Fully connected stack: dense+hidden activation per layer, custom terminal."""
    dims = list(dims)
    if len(dims) < 2:
        raise ConfigurationError("mlp needs at least input and output dims")
    if rng is None:
        rng = np.random.default_rng()
    layers = []
    for i in range(len(dims) - 1):
        layers.append(glorot_dense(dims[i], dims[i + 1], rng))
        kind = terminal if i == len(dims) - 2 else hidden
        layers.append(Activation(kind, slope=leaky_slope))
    return Network(layers)


def epoch_batches(n: int, batch_size: int, seed: int, epoch: int):
    """Seeded shuffle of range(n) cut into batches; the last partial batch is kept.

    The shuffle stream depends only on (seed, epoch), so different training
    procedures given the same seed consume identical batch sequences.
    """
    if n < 1:
        raise ConfigurationError("cannot batch an empty dataset")
    if batch_size < 1:
        raise ConfigurationError(f"batch size must be >= 1, got {batch_size}")
    order = derive_rng(seed, STREAM_SHUFFLE, epoch).permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def finite_difference_gradients(net: Network, batch, targets, loss, h: float = 1e-5):
    """Central-difference gradients of the scalar loss; checks the backward pass."""
    loss = resolve_loss(loss)

    def value():
        out, _ = forward(net, batch)
        return loss.value(out, np.atleast_2d(np.asarray(targets, dtype=float)))

    grads = []
    for p in net.parameters():
        g = np.zeros_like(p)
        flat_p = p.ravel()
        flat_g = g.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            up = value()
            flat_p[i] = orig - h
            down = value()
            flat_p[i] = orig
            flat_g[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def gradient_check(net: Network, batch, targets, loss, h: float = 1e-5) -> float:
    """Max relative error between analytic and finite-difference gradients."""
    analytic = gradients(net, batch, targets, loss)
    numeric = finite_difference_gradients(net, batch, targets, loss, h=h)
    worst = 0.0
    for a, fd in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(fd)), 1e-8)
        worst = max(worst, float((np.abs(a - fd) / denom).max()))
    return worst
