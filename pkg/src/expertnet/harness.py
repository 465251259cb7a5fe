"""Experiment harness: config parsing, the (method x noise ratio x data
fraction x seed) grid, accuracy measurement, and CSV report emission.

Within one (ratio, fraction, seed) cell every method sees the identical
corrupted dataset and identical batch-order seeds; per-cell streams are
derived from the master seed and the cell coordinates only, so adding methods
never perturbs existing cells.  Output files are byte-deterministic: timing
goes to the run log, never into results.csv.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import itertools
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import BaselineSpec, train_baseline
from .data import Dataset, load_table, make_blobs, stratified_split, subsample
from .errors import ConfigurationError, DataError, ExpertNetError, InputError
from .model import build_expertnet, train
from .nn import StepDecay
from .noise import NoiseSpec, corrupt_labels, load_matrix_csv, symmetric_matrix
from .seeding import (
    STREAM_DATA,
    STREAM_NOISE_TRAIN,
    STREAM_NOISE_VAL,
    STREAM_SUBSAMPLE,
    STREAM_TRAIN,
    derive_seed,
    stable_hash64,
)

CONFIG_SCHEMA = 1
METHODS = ("expertnet", "plain-ce", "bootstrap", "forward")
MODE_AMATEUR = "amateur-only"
MODE_FULL = "full"


@dataclass(frozen=True)
class BlobsSpec:
    n_classes: int = 4
    dim: int = 16
    per_class: int = 500
    val_per_class: int = 250
    separation: float = 6.0
    spread: float = 1.0


@dataclass(frozen=True)
class FileSpec:
    train_path: str
    val_path: str
    label_column: str
    feature_columns: tuple[str, ...] = ()  # empty = every non-label column


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: BlobsSpec | FileSpec = field(default_factory=BlobsSpec)
    noise_ratios: tuple[float, ...] = (0.2, 0.4)
    fractions: tuple[float, ...] = (1.0,)
    methods: tuple[str, ...] = ("expertnet",)
    seeds: tuple[int, ...] = (1,)
    matrix_path: str | None = None  # user transition matrix; overrides symmetric noise
    epochs: int = 60
    batch_size: int = 64
    lr: float = 0.01
    lr_decay_factor: float = 0.1
    lr_decay_period: int | None = None
    momentum: float = 0.9
    weight_decay: float = 1e-4
    amateur_hidden: tuple[int, ...] = (128, 64)
    expert_hidden: tuple[int, ...] = (64, 32)
    expert_terminal: str = "softmax"
    bootstrap_beta: float = 0.8
    bootstrap_variant: str = "soft"
    out: str = "results"

    def __post_init__(self):
        if not self.noise_ratios or not self.fractions or not self.methods or not self.seeds:
            raise ConfigurationError("noise_ratios, fractions, methods and seeds must be nonempty")
        for r in self.noise_ratios:
            if not 0.0 <= r < 1.0:
                raise ConfigurationError(f"noise ratio must be in [0, 1), got {r}")
        for f in self.fractions:
            if not 0.0 < f <= 1.0:
                raise ConfigurationError(f"fraction must be in (0, 1], got {f}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigurationError(f"unknown method {m!r} (choose from {METHODS})")

    def schedule(self) -> StepDecay:
        return StepDecay(self.lr, self.lr_decay_factor, self.lr_decay_period)


@dataclass(frozen=True)
class ResultRecord:
    method: str
    mode: str
    noise_ratio: float
    fraction: float
    seed: int
    accuracy: float | None
    epochs: int
    dataset_hash: str
    status: str = "ok"
    diagnostic: str = ""

    def sort_key(self):
        return (self.method, self.mode, self.noise_ratio, self.fraction, self.seed)


def accuracy(predictions, truths) -> float:
    """Fraction of predictions equal to the true labels."""
    p = np.asarray(predictions, dtype=np.int64)
    t = np.asarray(truths, dtype=np.int64)
    if p.shape != t.shape or p.ndim != 1:
        raise DataError(f"prediction/truth shapes differ: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise DataError("cannot score an empty prediction list")
    return float(np.count_nonzero(p == t)) / p.size


def dataset_hash(train_set: Dataset, val_set: Dataset) -> str:
    """Content hash over the exact (x, y, t) triples both splits carry."""
    digest = hashlib.blake2b(digest_size=8)
    for ds in (train_set, val_set):
        for arr in (ds.features, ds.true_labels, ds.given_labels):
            if arr is not None:
                digest.update(np.ascontiguousarray(arr).tobytes())
        digest.update(str(ds.n_classes).encode())
    return digest.hexdigest()


# --- config file parsing ------------------------------------------------------

def _parse_scalar(text: str):
    text = text.strip()
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse the flat `key = value` config format (schema 1).

    Lists are comma separated; `#` starts a comment; later keys win; CLI
    overrides win over file keys.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()
    raw.update({k: str(v) for k, v in (overrides or {}).items()})

    schema = int(raw.pop("schema", CONFIG_SCHEMA))
    if schema != CONFIG_SCHEMA:
        raise ConfigurationError(f"unsupported config schema {schema}")

    def take(key, default=None):
        return raw.pop(key) if key in raw else default

    def take_list(key, default):
        if key not in raw:
            return default
        items = [i.strip() for i in raw.pop(key).split(",") if i.strip()]
        return tuple(_parse_scalar(i) for i in items)

    kind = take("dataset", "blobs")
    if kind == "blobs":
        dataset = BlobsSpec(
            n_classes=int(take("blobs.classes", 4)),
            dim=int(take("blobs.dim", 16)),
            per_class=int(take("blobs.per_class", 500)),
            val_per_class=int(take("blobs.val_per_class", 250)),
            separation=float(take("blobs.separation", 6.0)),
            spread=float(take("blobs.spread", 1.0)),
        )
    elif kind == "file":
        train_path = take("file.train")
        val_path = take("file.val")
        label_column = take("file.label")
        if not (train_path and val_path and label_column):
            raise ConfigurationError("file dataset needs file.train, file.val and file.label")
        dataset = FileSpec(
            train_path=train_path,
            val_path=val_path,
            label_column=label_column,
            feature_columns=tuple(str(c) for c in take_list("file.features", ())),
        )
    else:
        raise ConfigurationError(f"unknown dataset kind {kind!r}")

    period = take("lr_decay_period")
    config = ExperimentConfig(
        dataset=dataset,
        noise_ratios=tuple(float(r) for r in take_list("noise_ratios", (0.2, 0.4))),
        fractions=tuple(float(f) for f in take_list("fractions", (1.0,))),
        methods=tuple(str(m) for m in take_list("methods", ("expertnet",))),
        seeds=tuple(int(s) for s in take_list("seeds", (1,))),
        matrix_path=take("matrix"),
        epochs=int(take("epochs", 60)),
        batch_size=int(take("batch_size", 64)),
        lr=float(take("lr", 0.01)),
        lr_decay_factor=float(take("lr_decay_factor", 0.1)),
        lr_decay_period=None if period in (None, "", "none") else int(period),
        momentum=float(take("momentum", 0.9)),
        weight_decay=float(take("weight_decay", 1e-4)),
        amateur_hidden=tuple(int(w) for w in take_list("amateur_hidden", (128, 64))),
        expert_hidden=tuple(int(w) for w in take_list("expert_hidden", (64, 32))),
        expert_terminal=str(take("expert_terminal", "softmax")),
        bootstrap_beta=float(take("bootstrap_beta", 0.8)),
        bootstrap_variant=str(take("bootstrap_variant", "soft")),
        out=str(take("out", "results")),
    )
    if raw:
        raise ConfigurationError(f"unknown config keys: {sorted(raw)}")
    return config


def read_config(path, overrides: dict | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


# --- grid execution -----------------------------------------------------------

def cell_seed(master_seed: int, ratio: float, fraction: float) -> int:
    """Method-independent stream root for one grid cell."""
    return derive_seed(master_seed,
                       stable_hash64(f"rho={ratio:.12g}"),
                       stable_hash64(f"frac={fraction:.12g}"))


def build_cell_datasets(config: ExperimentConfig, ratio: float, fraction: float,
                        master_seed: int):
    """Dataset pair plus the transition matrix shared by every method in a cell.

    Train split is subsampled to `fraction` before noise injection; the
    validation split gets given labels from an independent stream.
    """
    cell = cell_seed(master_seed, ratio, fraction)
    spec = config.dataset
    if isinstance(spec, BlobsSpec):
        full = make_blobs(spec.n_classes, spec.per_class + spec.val_per_class, spec.dim,
                          spec.separation, spec.spread, derive_seed(cell, STREAM_DATA))
        train_set, val_set = stratified_split(full, spec.per_class)
    else:
        train_set, stats, label_map = load_table(
            spec.train_path, spec.label_column, list(spec.feature_columns) or None)
        val_set, _, _ = load_table(
            spec.val_path, spec.label_column, list(spec.feature_columns) or None,
            stats=stats, label_map=label_map)
    train_set = subsample(train_set, fraction, derive_seed(cell, STREAM_SUBSAMPLE))
    if config.matrix_path:
        matrix = load_matrix_csv(config.matrix_path)
    else:
        matrix = symmetric_matrix(train_set.n_classes, ratio)
    train_noise = NoiseSpec.from_matrix(matrix, derive_seed(cell, STREAM_NOISE_TRAIN))
    val_noise = NoiseSpec.from_matrix(matrix, derive_seed(cell, STREAM_NOISE_VAL))
    train_set = train_set.with_given(
        corrupt_labels(train_set.true_labels, train_noise, train_set.n_classes))
    val_set = val_set.with_given(
        corrupt_labels(val_set.true_labels, val_noise, val_set.n_classes))
    return train_set, val_set, matrix


def _run_cell(config: ExperimentConfig, method: str, ratio: float, fraction: float,
              master_seed: int):
    """Train one method in one cell; returns (records, log lines)."""
    started = time.perf_counter()
    label = f"[{method} rho={ratio:g} frac={fraction:g} seed={master_seed}]"
    train_set, val_set, matrix = build_cell_datasets(config, ratio, fraction, master_seed)
    dhash = dataset_hash(train_set, val_set)
    train_seed = derive_seed(cell_seed(master_seed, ratio, fraction), STREAM_TRAIN)
    schedule = config.schedule()
    logs = [f"{label} dataset_hash={dhash} train_n={train_set.n} val_n={val_set.n}"]

    if method == "expertnet":
        model = build_expertnet(
            train_set.dim, train_set.n_classes, seed=train_seed,
            amateur_hidden=config.amateur_hidden, expert_hidden=config.expert_hidden,
            expert_terminal=config.expert_terminal,
            momentum=config.momentum, weight_decay=config.weight_decay)
        _, history = train(model, train_set, val_set, config.epochs,
                           config.batch_size, schedule, train_seed)
        for h in history:
            logs.append(f"{label} epoch={h.epoch} amateur_loss={h.amateur_loss:.6f} "
                        f"expert_loss={h.expert_loss:.6f} val_amateur={h.val_amateur_accuracy:.4f} "
                        f"val_full={h.val_full_accuracy:.4f}")
        final = history[-1]
        results = [
            (MODE_AMATEUR, final.val_amateur_accuracy),
            (MODE_FULL, final.val_full_accuracy),
        ]
    else:
        if method == "plain-ce":
            spec = BaselineSpec("plain-ce")
        elif method == "bootstrap":
            spec = BaselineSpec("bootstrap", beta=config.bootstrap_beta,
                                variant=config.bootstrap_variant)
        else:
            spec = BaselineSpec("forward", matrix=matrix)
        _, history = train_baseline(spec, train_set, val_set, config.epochs,
                                    config.batch_size, schedule, train_seed,
                                    hidden=config.amateur_hidden,
                                    momentum=config.momentum,
                                    weight_decay=config.weight_decay)
        for h in history:
            logs.append(f"{label} epoch={h.epoch} loss={h.amateur_loss:.6f} "
                        f"val_amateur={h.val_amateur_accuracy:.4f}")
        results = [(MODE_AMATEUR, history[-1].val_amateur_accuracy)]

    elapsed = time.perf_counter() - started
    logs.append(f"{label} done in {elapsed:.2f}s")
    records = [ResultRecord(method=method, mode=mode, noise_ratio=ratio,
                            fraction=fraction, seed=master_seed, accuracy=acc,
                            epochs=config.epochs, dataset_hash=dhash)
               for mode, acc in results]
    return records, logs


def run_grid(config: ExperimentConfig, threads: int = 1,
             log_lines: list[str] | None = None) -> list[ResultRecord]:
    """Run every (method, ratio, fraction, seed) cell and return sorted records.

    A failing cell yields a failed record with its diagnostic; the rest of the
    grid still runs.  Per-cell log lines (incl. timing) land in `log_lines`
    in canonical order when a list is supplied.
    """
    work = list(itertools.product(config.methods, config.noise_ratios,
                                  config.fractions, config.seeds))

    def run_one(item):
        method, ratio, fraction, seed = item
        try:
            return _run_cell(config, method, ratio, fraction, seed)
        except ExpertNetError as exc:
            diagnostic = f"{type(exc).__name__}: {exc}"
            modes = (MODE_AMATEUR, MODE_FULL) if method == "expertnet" else (MODE_AMATEUR,)
            records = [ResultRecord(method=method, mode=mode, noise_ratio=ratio,
                                    fraction=fraction, seed=seed, accuracy=None,
                                    epochs=config.epochs, dataset_hash="",
                                    status="failed", diagnostic=diagnostic)
                       for mode in modes]
            label = f"[{method} rho={ratio:g} frac={fraction:g} seed={seed}]"
            return records, [f"{label} FAILED {diagnostic}"]

    if threads <= 1:
        outcomes = [run_one(item) for item in work]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run_one, work))

    records: list[ResultRecord] = []
    keyed_logs = []
    for (records_i, logs_i) in outcomes:
        records.extend(records_i)
        keyed_logs.append((records_i[0].sort_key(), logs_i))
    records.sort(key=ResultRecord.sort_key)
    if log_lines is not None:
        for _, logs_i in sorted(keyed_logs, key=lambda kv: kv[0]):
            log_lines.extend(logs_i)
    return records


# --- report emission ----------------------------------------------------------

LONG_CSV_HEADER = "method,mode,noise_ratio,fraction,seed,accuracy,epochs,status,dataset_hash,diagnostic"


def _fmt_accuracy(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def emit_report(records, out_dir) -> list[str]:
    """Write results.csv plus one pivot CSV per noise ratio; returns the paths.

    Pivot rows are fractions (descending), columns are method/mode pairs, and
    cells are mean +/- sample standard deviation over seeds.  Byte-identical
    output for identical records.
    """
    records = sorted(records, key=ResultRecord.sort_key)
    if not records:
        raise DataError("no records to report")
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, "results.csv")]
    rows = [LONG_CSV_HEADER]
    for r in records:
        rows.append(",".join([
            r.method, r.mode, f"{r.noise_ratio:g}", f"{r.fraction:g}", str(r.seed),
            _fmt_accuracy(r.accuracy), str(r.epochs), r.status, r.dataset_hash,
            r.diagnostic.replace(",", ";"),
        ]))
    with open(paths[0], "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")

    ok = [r for r in records if r.status == "ok"]
    for ratio in sorted({r.noise_ratio for r in records}):
        subset = [r for r in ok if r.noise_ratio == ratio]
        columns = sorted({(r.method, r.mode) for r in subset})
        fractions = sorted({r.fraction for r in records if r.noise_ratio == ratio}, reverse=True)
        lines = ["fraction," + ",".join(f"{m}/{mode}" for m, mode in columns)]
        for fraction in fractions:
            cells = [f"{fraction:g}"]
            for method, mode in columns:
                accs = [r.accuracy for r in subset
                        if r.fraction == fraction and (r.method, r.mode) == (method, mode)]
                if accs:
                    mean = float(np.mean(accs))
                    std = float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0
                    cells.append(f"{mean:.4f}±{std:.4f}")
                else:
                    cells.append("")
            lines.append(",".join(cells))
        path = os.path.join(out_dir, f"pivot_rho{round(ratio * 100):02d}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        paths.append(path)
    return paths
