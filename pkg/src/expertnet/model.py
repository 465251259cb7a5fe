"""Amateur/Expert co-training.

The amateur is a plain classifier over features; the expert maps the amateur's
class probabilities concatenated with a one-hot given label to a corrected
class distribution.  Each minibatch alternates: the expert takes one SGD step
toward the true labels on the concatenated input, then the freshly updated
expert's output becomes the amateur's soft target for its own SGD step.
Neither step propagates gradients into the other network.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset, one_hot_batch
from .errors import ConfigurationError, DataError, DimensionError
from .nn import (
    Activation,
    Dense,
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
from .seeding import STREAM_INIT, derive_rng

DISTRIBUTION_TOL = 1e-6


@dataclass
class ExpertNet:
    """Amateur and expert networks plus their optimizer states."""

    amateur: Network
    expert: Network
    amateur_state: SgdState
    expert_state: SgdState
    n_classes: int

    def __post_init__(self):
        k = self.n_classes
        if self.amateur.output_dim != k:
            raise DimensionError(f"amateur outputs {self.amateur.output_dim}, expected {k}")
        if self.expert.input_dim != 2 * k:
            raise DimensionError(
                f"expert input dim must be 2*{k} (probabilities + one-hot given label), "
                f"got {self.expert.input_dim}"
            )
        if self.expert.output_dim != k:
            raise DimensionError(f"expert outputs {self.expert.output_dim}, expected {k}")
        if self.amateur.terminal_kind != "softmax":
            raise ConfigurationError("amateur must end in softmax")
        if self.expert.terminal_kind not in ("softmax", "sigmoid"):
            raise ConfigurationError("expert must end in softmax or sigmoid")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    amateur_loss: float
    expert_loss: float | None
    val_amateur_accuracy: float
    val_full_accuracy: float | None


def build_expertnet(feature_dim: int, n_classes: int, seed: int,
                    amateur_hidden=(128, 64), expert_hidden=(64, 32),
                    expert_terminal: str = "softmax", leaky_slope: float = 0.01,
                    momentum: float = 0.9, weight_decay: float = 1e-4) -> ExpertNet:
    """Fresh model: relu amateur MLP, leaky-relu expert MLP over 2K inputs."""
    if expert_terminal not in ("softmax", "sigmoid"):
        raise ConfigurationError(f"expert terminal must be softmax or sigmoid, got {expert_terminal!r}")
    amateur = mlp((feature_dim, *amateur_hidden, n_classes), hidden="relu",
                  terminal="softmax", rng=derive_rng(seed, STREAM_INIT, 0))
    expert = mlp((2 * n_classes, *expert_hidden, n_classes), hidden="leaky-relu",
                 terminal=expert_terminal, leaky_slope=leaky_slope,
                 rng=derive_rng(seed, STREAM_INIT, 1))
    return ExpertNet(
        amateur=amateur,
        expert=expert,
        amateur_state=SgdState.for_network(amateur, momentum, weight_decay),
        expert_state=SgdState.for_network(expert, momentum, weight_decay),
        n_classes=n_classes,
    )


def expert_input(amateur_probs, given_labels) -> np.ndarray:
    """Concatenate probability rows with one-hot given labels, in that order."""
    probs = np.asarray(amateur_probs, dtype=float)
    single = probs.ndim == 1
    probs = np.atleast_2d(probs)
    k = probs.shape[1]
    if np.any(probs < -DISTRIBUTION_TOL) or np.any(probs > 1.0 + DISTRIBUTION_TOL):
        raise DataError("probability entries outside [0, 1]")
    if np.any(np.abs(probs.sum(axis=1) - 1.0) > DISTRIBUTION_TOL):
        raise DataError("probability rows must sum to 1")
    labels = np.atleast_1d(np.asarray(given_labels, dtype=np.int64))
    if labels.shape != (probs.shape[0],):
        raise DimensionError(f"{probs.shape[0]} probability rows but {labels.shape} labels")
    out = np.concatenate([probs, one_hot_batch(labels, k)], axis=1)
    return out[0] if single else out


def _soft_target(model: ExpertNet, expert_out: np.ndarray) -> np.ndarray:
    # sigmoid-terminal experts emit unnormalized rows; rescale to distributions
    if model.expert.terminal_kind == "softmax":
        return expert_out
    return expert_out / expert_out.sum(axis=1, keepdims=True)


def train_step(model: ExpertNet, x, given_labels, true_labels, lr: float):
    """One alternating minibatch update; returns (amateur loss, expert loss).

    Order: amateur predicts, predictions join the one-hot given labels, the
    expert updates toward the true labels, the updated expert re-predicts, and
    the amateur updates toward that output as a constant soft target.  With
    lr == 0 both losses are still measured and the model is left untouched.
    """
    if lr < 0.0:
        raise ConfigurationError(f"learning rate must be >= 0, got {lr}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] == 0:
        raise DataError("empty batch")
    amateur_probs, _ = forward(model.amateur, x)
    z = expert_input(amateur_probs, given_labels)
    true_onehot = one_hot_batch(true_labels, model.n_classes)
    expert_loss, expert_grads = loss_and_gradients(model.expert, z, true_onehot, "cross-entropy")
    if lr != 0.0:
        sgd_step(model.expert.parameters(), expert_grads, model.expert_state, lr)
    expert_out, _ = forward(model.expert, z)
    amateur_target = _soft_target(model, expert_out)
    amateur_loss, amateur_grads = loss_and_gradients(model.amateur, x, amateur_target, "cross-entropy")
    if lr != 0.0:
        sgd_step(model.amateur.parameters(), amateur_grads, model.amateur_state, lr)
    return amateur_loss, expert_loss


def infer_amateur(model: ExpertNet, x):
    """Argmax of the amateur's probabilities; ties go to the lowest class index."""
    arr = np.asarray(x, dtype=float)
    probs, _ = forward(model.amateur, arr)
    preds = np.argmax(probs, axis=1)
    return int(preds[0]) if arr.ndim == 1 else preds


def infer_full(model: ExpertNet, x, given_labels):
    """Argmax of the expert applied to (amateur probabilities, given label)."""
    arr = np.asarray(x, dtype=float)
    probs, _ = forward(model.amateur, arr)
    out, _ = forward(model.expert, expert_input(probs, given_labels))
    preds = np.argmax(out, axis=1)
    return int(preds[0]) if arr.ndim == 1 else preds


def train(model: ExpertNet, train_set: Dataset, val_set: Dataset, epochs: int,
          batch_size: int, schedule: StepDecay, seed: int):
    """Seeded epochs of alternating minibatch updates.

    Records per-epoch mean losses and validation accuracy in both inference
    modes.  Deterministic per seed.
    """
    if epochs < 1:
        raise ConfigurationError(f"epochs must be >= 1, got {epochs}")
    for name, ds in (("train", train_set), ("validation", val_set)):
        if ds.n == 0:
            raise ConfigurationError(f"{name} set is empty")
        if ds.given_labels is None:
            raise ConfigurationError(f"{name} set has no given labels; inject noise first")
    history: list[EpochStats] = []
    for epoch in range(epochs):
        lr = lr_at(schedule, epoch)
        amateur_losses, expert_losses = [], []
        for idx in epoch_batches(train_set.n, batch_size, seed, epoch):
            l_a, l_e = train_step(
                model,
                train_set.features[idx],
                train_set.given_labels[idx],
                train_set.true_labels[idx],
                lr,
            )
            amateur_losses.append(l_a)
            expert_losses.append(l_e)
        acc_amateur = float(np.mean(
            infer_amateur(model, val_set.features) == val_set.true_labels
        ))
        acc_full = float(np.mean(
            infer_full(model, val_set.features, val_set.given_labels) == val_set.true_labels
        ))
        history.append(EpochStats(
            epoch=epoch,
            amateur_loss=float(np.mean(amateur_losses)),
            expert_loss=float(np.mean(expert_losses)),
            val_amateur_accuracy=acc_amateur,
            val_full_accuracy=acc_full,
        ))
    return model, history


# --- checkpointing -----------------------------------------------------------

CHECKPOINT_FORMAT = "expertnet-checkpoint"
CHECKPOINT_VERSION = 1


def _layer_to_json(layer):
    if layer.kind == "dense":
        return {"kind": "dense", "weight": layer.weight.tolist(), "bias": layer.bias.tolist()}
    entry = {"kind": layer.kind}
    if layer.kind == "leaky-relu":
        entry["slope"] = layer.slope
    return entry


def _layer_from_json(entry):
    if entry["kind"] == "dense":
        return Dense(np.array(entry["weight"]), np.array(entry["bias"]))
    return Activation(entry["kind"], slope=entry.get("slope", 0.01))


def save_checkpoint(model: ExpertNet, path) -> None:
    """Write a self-describing JSON checkpoint (decimal parameter values)."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "n_classes": model.n_classes,
        "feature_dim": model.amateur.input_dim,
        "amateur": [_layer_to_json(l) for l in model.amateur.layers],
        "expert": [_layer_to_json(l) for l in model.expert.layers],
        "amateur_opt": {"momentum": model.amateur_state.momentum,
                        "weight_decay": model.amateur_state.weight_decay},
        "expert_opt": {"momentum": model.expert_state.momentum,
                       "weight_decay": model.expert_state.weight_decay},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> ExpertNet:
    """Rebuild a model for inference; optimizer velocity starts at zero."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ConfigurationError(f"{path} is not an {CHECKPOINT_FORMAT} file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {doc.get('version')}")
    amateur = Network([_layer_from_json(e) for e in doc["amateur"]])
    expert = Network([_layer_from_json(e) for e in doc["expert"]])
    return ExpertNet(
        amateur=amateur,
        expert=expert,
        amateur_state=SgdState.for_network(amateur, **doc["amateur_opt"]),
        expert_state=SgdState.for_network(expert, **doc["expert_opt"]),
        n_classes=doc["n_classes"],
    )
