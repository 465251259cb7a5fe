"""Reference training procedures for the harness comparison.

All three train an amateur-shaped classifier with the same batching, init and
optimizer contract as the co-training loop, differing only in the per-batch
loss recipe: plain cross-entropy on the given labels, bootstrap's convex blend
of given label and own prediction, or forward correction through a transition
matrix.  None of them sees given labels at inference time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, one_hot_batch
from .errors import ConfigurationError, DataError, DimensionError
from .nn import (
    CrossEntropyLoss,
    ForwardCorrectedLoss,
    Network,
    SgdState,
    StepDecay,
    epoch_batches,
    forward,
    loss_and_gradients,
    lr_at,
    mlp,
    sgd_step,
)
from .noise import validate_transition_matrix
from .seeding import STREAM_INIT, derive_rng

BASELINE_KINDS = ("plain-ce", "bootstrap", "forward")


@dataclass(frozen=True)
class BaselineSpec:
    kind: str
    beta: float = 0.8
    variant: str = "soft"
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ConfigurationError(f"unknown baseline {self.kind!r}")
        if self.kind == "bootstrap":
            if not 0.0 < self.beta <= 1.0:
                raise ConfigurationError(f"bootstrap beta must be in (0, 1], got {self.beta}")
            if self.variant not in ("soft", "hard"):
                raise ConfigurationError(f"bootstrap variant must be soft or hard, got {self.variant!r}")
        if self.kind == "forward":
            if self.matrix is None:
                raise ConfigurationError("forward baseline needs a transition matrix")
            object.__setattr__(self, "matrix", validate_transition_matrix(self.matrix))


def bootstrap_target(pred, given_labels, beta: float, variant: str = "soft") -> np.ndarray:
    """beta*onehot(given) + (1-beta)*(pred or onehot(argmax pred)).

    beta = 0 is allowed here (degenerate: the prediction itself); BaselineSpec
    restricts configured runs to (0, 1].
    """
    if not 0.0 <= beta <= 1.0:
        raise ConfigurationError(f"beta must be in [0, 1], got {beta}")
    if variant not in ("soft", "hard"):
        raise ConfigurationError(f"variant must be soft or hard, got {variant!r}")
    p = np.asarray(pred, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    labels = np.atleast_1d(np.asarray(given_labels, dtype=np.int64))
    if labels.shape != (p.shape[0],):
        raise DataError(f"{p.shape[0]} prediction rows but {labels.shape} labels")
    given = one_hot_batch(labels, p.shape[1])
    model_part = p if variant == "soft" else one_hot_batch(np.argmax(p, axis=1), p.shape[1])
    out = beta * given + (1.0 - beta) * model_part
    return out[0] if single else out


def forward_corrected_prediction(pred, matrix) -> np.ndarray:
    """Predicted noisy-label distribution: out_j = sum_i T[i, j] * pred_i."""
    matrix = validate_transition_matrix(matrix)
    p = np.asarray(pred, dtype=float)
    if p.shape[-1] != matrix.shape[0]:
        raise DimensionError(f"prediction width {p.shape[-1]} != matrix size {matrix.shape[0]}")
    return p @ matrix


def train_baseline(spec: BaselineSpec, train_set: Dataset, val_set: Dataset,
                   epochs: int, batch_size: int, schedule: StepDecay, seed: int,
                   hidden=(128, 64), momentum: float = 0.9, weight_decay: float = 1e-4):
    """Train one amateur-shaped network under the chosen loss recipe.

    Shares the batching and init streams with the co-training loop, so equal
    seeds give identical batch sequences and identical initial weights.
    Validation accuracy is amateur-only (no given labels at inference).
    Returns (network, history of EpochStats).
    """
    if epochs < 1:
        raise ConfigurationError(f"epochs must be >= 1, got {epochs}")
    for name, ds in (("train", train_set), ("validation", val_set)):
        if ds.n == 0:
            raise ConfigurationError(f"{name} set is empty")
    if train_set.given_labels is None:
        raise ConfigurationError("train set has no given labels; inject noise first")

    from .model import EpochStats  # shared history record

    net = mlp((train_set.dim, *hidden, train_set.n_classes), hidden="relu",
              terminal="softmax", rng=derive_rng(seed, STREAM_INIT, 0))
    state = SgdState.for_network(net, momentum, weight_decay)
    ce = CrossEntropyLoss()
    fwd_loss = ForwardCorrectedLoss(spec.matrix) if spec.kind == "forward" else None

    history: list[EpochStats] = []
    for epoch in range(epochs):
        lr = lr_at(schedule, epoch)
        losses = []
        for idx in epoch_batches(train_set.n, batch_size, seed, epoch):
            x = train_set.features[idx]
            y = train_set.given_labels[idx]
            if spec.kind == "plain-ce":
                target = one_hot_batch(y, train_set.n_classes)
                loss_value, grads = loss_and_gradients(net, x, target, ce)
            elif spec.kind == "bootstrap":
                pred, _ = forward(net, x)
                target = bootstrap_target(pred, y, spec.beta, spec.variant)
                loss_value, grads = loss_and_gradients(net, x, target, ce)
            else:
                target = one_hot_batch(y, train_set.n_classes)
                loss_value, grads = loss_and_gradients(net, x, target, fwd_loss)
            if lr != 0.0:
                sgd_step(net.parameters(), grads, state, lr)
            losses.append(loss_value)
        preds, _ = forward(net, val_set.features)
        acc = float(np.mean(np.argmax(preds, axis=1) == val_set.true_labels))
        history.append(EpochStats(
            epoch=epoch,
            amateur_loss=float(np.mean(losses)),
            expert_loss=None,
            val_amateur_accuracy=acc,
            val_full_accuracy=None,
        ))
    return net, history
