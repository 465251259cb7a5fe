"""Label-noise engine.

Builds row-stochastic transition matrices, corrupts label sequences with a
seeded stream, and estimates empirical transition matrices from (true, given)
label pairs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError, DimensionError
from .seeding import derive_rng

ROW_SUM_TOL = 1e-9


def validate_transition_matrix(matrix) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"transition matrix must be square, got shape {matrix.shape}")
    if np.any(matrix < 0.0) or np.any(matrix > 1.0):
        raise ConfigurationError("transition matrix entries must lie in [0, 1]")
    if not np.allclose(matrix.sum(axis=1), 1.0, atol=ROW_SUM_TOL):
        raise ConfigurationError("transition matrix rows must sum to 1")
    return matrix


def symmetric_matrix(n_classes: int, ratio: float) -> np.ndarray:
    """Flip with probability `ratio`, uniformly onto the other classes."""
    if n_classes < 2:
        raise ConfigurationError(f"need at least 2 classes, got {n_classes}")
    if not 0.0 <= ratio < 1.0:
        raise ConfigurationError(f"noise ratio must be in [0, 1), got {ratio}")
    off = ratio / (n_classes - 1)
    matrix = np.full((n_classes, n_classes), off)
    np.fill_diagonal(matrix, 1.0 - ratio)
    return matrix


@dataclass(frozen=True)
class NoiseSpec:
    """Either symmetric(ratio) or an explicit matrix, plus the stream seed."""

    seed: int
    ratio: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if (self.ratio is None) == (self.matrix is None):
            raise ConfigurationError("specify exactly one of ratio or matrix")
        if self.ratio is not None and not 0.0 <= self.ratio < 1.0:
            raise ConfigurationError(f"noise ratio must be in [0, 1), got {self.ratio}")
        if self.matrix is not None:
            object.__setattr__(self, "matrix", validate_transition_matrix(self.matrix))

    @classmethod
    def symmetric(cls, ratio: float, seed: int) -> "NoiseSpec":
        return cls(seed=seed, ratio=ratio)

    @classmethod
    def from_matrix(cls, matrix, seed: int) -> "NoiseSpec":
        return cls(seed=seed, matrix=matrix)

    def transition_matrix(self, n_classes: int) -> np.ndarray:
        if self.matrix is not None:
            if self.matrix.shape[0] != n_classes:
                raise DimensionError(
                    f"matrix is {self.matrix.shape[0]}x{self.matrix.shape[0]} "
                    f"but data has {n_classes} classes"
                )
            return self.matrix
        return symmetric_matrix(n_classes, self.ratio)


def corrupt_labels(true_labels, spec: NoiseSpec, n_classes: int) -> np.ndarray:
    """Draw each given label from the matrix row of its true class.

    Deterministic per (labels, seed): one uniform variate per sample, mapped
    through the row's cumulative distribution.
    """
    labels = np.asarray(true_labels, dtype=np.int64)
    if labels.ndim != 1:
        raise DataError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise DataError(f"label out of range [0, {n_classes})")
    matrix = spec.transition_matrix(n_classes)
    cumulative = np.cumsum(matrix, axis=1)
    cumulative[:, -1] = 1.0  # guard against rounding in the final bin
    u = derive_rng(spec.seed).random(labels.size)
    given = (u[:, None] >= cumulative[labels]).sum(axis=1)
    return given.astype(np.int64)


def empirical_matrix(true_labels, given_labels, n_classes: int) -> np.ndarray:
    """Row i = frequencies of given labels among samples whose true class is i.

    Rows with no samples are returned uniform; a warning flags them.
    """
    t = np.asarray(true_labels, dtype=np.int64)
    g = np.asarray(given_labels, dtype=np.int64)
    if t.shape != g.shape or t.ndim != 1:
        raise DataError(f"label sequences must be equal-length 1-D, got {t.shape} and {g.shape}")
    for name, arr in (("true", t), ("given", g)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise DataError(f"{name} label out of range [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes))
    np.add.at(counts, (t, g), 1.0)
    support = counts.sum(axis=1)
    empty = support == 0
    if np.any(empty):
        warnings.warn(
            f"no samples for true classes {np.flatnonzero(empty).tolist()}; rows set uniform",
            stacklevel=2,
        )
        counts[empty] = 1.0
        support[empty] = n_classes
    return counts / support[:, None]


def save_matrix_csv(matrix, path) -> None:
    matrix = validate_transition_matrix(matrix)
    with open(path, "w", encoding="utf-8") as fh:
        for row in matrix:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    return validate_transition_matrix(np.array(rows))
