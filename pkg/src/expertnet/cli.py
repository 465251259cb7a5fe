"""Command-line front door: run grids, train single cells, inspect noise
statistics, and verify the gradient engine."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import harness
from .errors import ExpertNetError
from .model import save_checkpoint
from .nn import ForwardCorrectedLoss, gradient_check, mlp
from .noise import NoiseSpec, corrupt_labels, empirical_matrix, load_matrix_csv, symmetric_matrix
from .seeding import derive_rng


def _add_common(parser, config=True):
    if config:
        parser.add_argument("--config", help="experiment config file")
    parser.add_argument("--seed", type=int, help="override the seed list with one seed")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument("--threads", type=int, default=1, help="worker pool size")


def _load_config(args) -> harness.ExperimentConfig:
    overrides = {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ExpertNetError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["seeds"] = str(args.seed)
    if args.out:
        overrides["out"] = args.out
    if args.config:
        return harness.read_config(args.config, overrides)
    return harness.parse_config("", overrides)


def cmd_run(args) -> int:
    config = _load_config(args)
    log_lines: list[str] = []
    records = harness.run_grid(config, threads=args.threads, log_lines=log_lines)
    paths = harness.emit_report(records, config.out)
    with open(os.path.join(config.out, "run.log"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(log_lines) + "\n")
    failed = [r for r in records if r.status != "ok"]
    for path in paths:
        print(f"wrote {path}")
    print(f"{len(records)} records, {len(failed)} failed")
    for r in failed:
        print(f"  FAILED {r.method}/{r.mode} rho={r.noise_ratio:g} "
              f"frac={r.fraction:g} seed={r.seed}: {r.diagnostic}")
    return 1 if failed else 0


def cmd_train(args) -> int:
    config = _load_config(args)
    method = args.method
    ratio = args.ratio if args.ratio is not None else config.noise_ratios[0]
    fraction = args.fraction if args.fraction is not None else config.fractions[0]
    seed = config.seeds[0]

    train_set, val_set, matrix = harness.build_cell_datasets(config, ratio, fraction, seed)
    train_seed = harness.derive_seed(harness.cell_seed(seed, ratio, fraction),
                                     harness.STREAM_TRAIN)
    schedule = config.schedule()
    print(f"method={method} rho={ratio:g} frac={fraction:g} seed={seed} "
          f"train_n={train_set.n} val_n={val_set.n}")

    if method == "expertnet":
        from .model import build_expertnet, train
        model = build_expertnet(train_set.dim, train_set.n_classes, seed=train_seed,
                                amateur_hidden=config.amateur_hidden,
                                expert_hidden=config.expert_hidden,
                                expert_terminal=config.expert_terminal,
                                momentum=config.momentum, weight_decay=config.weight_decay)
        _, history = train(model, train_set, val_set, config.epochs,
                           config.batch_size, schedule, train_seed)
        for h in history:
            print(f"epoch {h.epoch:3d}  amateur_loss={h.amateur_loss:.6f} "
                  f"expert_loss={h.expert_loss:.6f}  val_amateur={h.val_amateur_accuracy:.4f} "
                  f"val_full={h.val_full_accuracy:.4f}")
        if args.save:
            save_checkpoint(model, args.save)
            print(f"checkpoint written to {args.save}")
    else:
        from .baselines import BaselineSpec, train_baseline
        if method == "plain-ce":
            spec = BaselineSpec("plain-ce")
        elif method == "bootstrap":
            spec = BaselineSpec("bootstrap", beta=config.bootstrap_beta,
                                variant=config.bootstrap_variant)
        elif method == "forward":
            spec = BaselineSpec("forward", matrix=matrix)
        else:
            raise ExpertNetError(f"unknown method {method!r}")
        _, history = train_baseline(spec, train_set, val_set, config.epochs,
                                    config.batch_size, schedule, train_seed,
                                    hidden=config.amateur_hidden,
                                    momentum=config.momentum,
                                    weight_decay=config.weight_decay)
        for h in history:
            print(f"epoch {h.epoch:3d}  loss={h.amateur_loss:.6f}  "
                  f"val_amateur={h.val_amateur_accuracy:.4f}")
    return 0


def cmd_noise_stats(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.matrix:
        matrix = load_matrix_csv(args.matrix)
        k = matrix.shape[0]
        spec = NoiseSpec.from_matrix(matrix, seed)
    else:
        k = args.classes
        matrix = symmetric_matrix(k, args.ratio)
        spec = NoiseSpec.symmetric(args.ratio, seed)
    per_class = args.samples // k
    true = np.repeat(np.arange(k), per_class)
    given = corrupt_labels(true, spec, k)
    observed = empirical_matrix(true, given, k)
    flip_rate = float(np.mean(given != true))
    print(f"classes={k} samples={true.size} seed={seed}")
    print(f"realized flip rate: {flip_rate:.4f}")
    print(f"max |observed - nominal| entry: {np.abs(observed - matrix).max():.4f}")
    print("nominal matrix:")
    for row in matrix:
        print("  " + " ".join(f"{v:.4f}" for v in row))
    print("observed matrix:")
    for row in observed:
        print("  " + " ".join(f"{v:.4f}" for v in row))
    return 0


def cmd_gradcheck(args) -> int:
    rng = derive_rng(args.seed if args.seed is not None else 0)
    hiddens = ["relu", "leaky-relu", "sigmoid"]
    terminals = ["softmax", "sigmoid"]
    worst = 0.0
    failures = 0
    for case in range(args.cases):
        k = int(rng.integers(2, 5))
        dims = (int(rng.integers(2, 5)), int(rng.integers(2, 7)), k)
        hidden = hiddens[case % len(hiddens)]
        terminal = terminals[(case // len(hiddens)) % len(terminals)]
        net = mlp(dims, hidden=hidden, terminal=terminal, rng=rng)
        x = rng.standard_normal((3, dims[0]))
        targets = rng.random((3, k))
        targets /= targets.sum(axis=1, keepdims=True)
        if case % 2 == 0:
            loss = "cross-entropy"
        else:
            loss = ForwardCorrectedLoss(symmetric_matrix(k, 0.3))
        err = gradient_check(net, x, targets, loss)
        worst = max(worst, err)
        if err > 1e-4:
            failures += 1
            print(f"case {case}: FAIL relative error {err:.3e} "
                  f"(hidden={hidden}, terminal={terminal})")
    print(f"{args.cases} cases, worst relative error {worst:.3e}, tolerance 1e-4")
    print("gradcheck PASS" if failures == 0 else f"gradcheck FAIL ({failures} cases)")
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="expertnet",
        description="Noisy-label co-training experiments: an amateur classifier "
                    "and an expert label corrector trained alternately.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the full experiment grid from a config")
    _add_common(p_run)
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
    p_run.set_defaults(fn=cmd_run)

    p_train = sub.add_parser("train", help="train a single grid cell and print history")
    _add_common(p_train)
    p_train.add_argument("--method", default="expertnet", choices=harness.METHODS)
    p_train.add_argument("--ratio", type=float, help="noise ratio (default: first in config)")
    p_train.add_argument("--fraction", type=float, help="training-data fraction")
    p_train.add_argument("--save", help="write a model checkpoint here (expertnet only)")
    p_train.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_train.set_defaults(fn=cmd_train)

    p_noise = sub.add_parser("noise-stats", help="empirical transition-matrix report")
    p_noise.add_argument("--classes", type=int, default=10)
    p_noise.add_argument("--ratio", type=float, default=0.3)
    p_noise.add_argument("--samples", type=int, default=100000)
    p_noise.add_argument("--matrix", help="transition matrix CSV instead of symmetric noise")
    p_noise.add_argument("--seed", type=int)
    p_noise.set_defaults(fn=cmd_noise_stats)

    p_grad = sub.add_parser("gradcheck", help="finite-difference check of the gradient engine")
    p_grad.add_argument("--cases", type=int, default=100)
    p_grad.add_argument("--seed", type=int)
    p_grad.set_defaults(fn=cmd_gradcheck)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ExpertNetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
