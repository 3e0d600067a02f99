"""Command-line front door: fit, predict, adapt, experiment, synth.

Standard output carries machine-consumable results; progress notes go to
standard error. Every failure exits non-zero with a single parsable line
``error:<code>: message`` (2 = configuration problem, 3 = data problem,
1 = internal error).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import depth_adapt, evaluation, pipeline, synth
from .dataset import SIZE_TIERS, load_dataset, sample_split, save_dataset, training_size
from .errors import ConfigError, DalError, DataError
from .localmodels import CART_LOCAL, LINEAR, REGULARIZED_NET, LocalModelSpec

MODEL_KINDS = {
    "linear": LINEAR,
    "cart": CART_LOCAL,
    "cart_local": CART_LOCAL,
    "net": REGULARIZED_NET,
    "regularized_net": REGULARIZED_NET,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error:2: {message}\n")
        raise SystemExit(2)


def _progress(message: str) -> None:
    sys.stderr.write(message + "\n")


def _load_run_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read run config {path}: {exc}")
    if not isinstance(config, dict):
        raise ConfigError(f"run config {path} must hold a JSON object")
    return config


def _resolve_spec(args) -> LocalModelSpec:
    kind = MODEL_KINDS.get(args.model)
    if kind is None:
        raise ConfigError(f"unknown local model {args.model!r}; choose from {sorted(MODEL_KINDS)}")
    return LocalModelSpec(kind=kind)


def _training_subset(dataset, args, config):
    """Apply --size/--tier selection; returns (train_dataset, note)."""
    if args.size is not None and args.tier is not None:
        raise ConfigError("--size and --tier are mutually exclusive")
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    if args.size is not None:
        size = args.size
        label = str(size)
    elif args.tier is not None:
        size = training_size(dataset, args.tier, config.get("mixed_sizes"))
        label = args.tier
    else:
        return dataset, "all samples"
    plan = sample_split(dataset, size, seed, size_label=label)
    return dataset.subset(plan.train_indices), f"{size} samples ({label}, seed {seed})"


def cmd_fit(args) -> int:
    config = _load_run_config(args.config)
    spec = _resolve_spec(args)
    dataset = load_dataset(args.data)
    train, note = _training_subset(dataset, args, config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    _progress(f"training on {note} from {args.data}")
    model = pipeline.fit(train, spec, d_override=args.d, seed=seed, n_jobs=args.jobs)
    pipeline.save_model(model, args.out)
    print(f"d={model.chosen_d}, divisions={len(model.divisions)}")
    for division in model.divisions.divisions:
        print(f"division {division.label}: size={division.size}, h={division.h:.6g}, z={division.z:g}")
    _progress(f"model written to {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = pipeline.load_model(args.model)
    with open(args.data, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{args.data}: empty query file")
        rows = [row for row in reader if row]
    expected = [m.name for m in model.option_meta]
    if header != expected:
        raise DataError(
            f"query header {header} does not match the model's options {expected}"
        )
    try:
        X = np.array([[float(cell) for cell in row] for row in rows])
    except ValueError as exc:
        raise DataError(f"{args.data}: {exc}")
    if X.ndim != 2 or X.shape[1] != len(expected):
        raise DataError(f"{args.data}: every row must hold {len(expected)} option values")
    predictions = pipeline.predict_many(model, X)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(header + ["predicted"])
        for row, pred in zip(rows, predictions):
            writer.writerow(row + [repr(float(pred))])
    finally:
        if args.out:
            out.close()
    return 0


def cmd_adapt(args) -> int:
    config = _load_run_config(args.config)
    spec = _resolve_spec(args)
    dataset = load_dataset(args.data)
    train, note = _training_subset(dataset, args, config)
    _progress(f"scoring depths on {note} from {args.data}")
    from .cart import train_cart

    tree = train_cart(train.X, train.y, min_leaf_size=2)
    scores = depth_adapt.depth_scores(tree, train.y, spec.min_samples)
    chosen = depth_adapt.select_best(scores)
    if args.format == "csv":
        print("d,divisions,mu_hv,chosen")
        for s in scores:
            print(f"{s.d},{s.division_count},{s.mu_hv:.6f},{int(s.d == chosen.d)}")
    else:
        print(f"{'d':>3} {'divisions':>9} {'mu_hv':>16}  chosen")
        for s in scores:
            flag = "*" if s.d == chosen.d else ""
            print(f"{s.d:>3} {s.division_count:>9} {s.mu_hv:>16.4f}  {flag}")
    if tree.max_depth == 0:
        print("note: tree has no splits")
    return 0


def cmd_experiment(args) -> int:
    config = _load_run_config(args.config)
    spec = _resolve_spec(args)
    repeats = args.repeats if args.repeats is not None else int(config.get("repeats", 30))
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    tiers = args.tiers.split(",") if args.tiers else ["S1"]
    for tier in tiers:
        if tier not in SIZE_TIERS:
            raise ConfigError(f"unknown tier {tier!r}; tiers are {', '.join(SIZE_TIERS)}")

    datasets = []
    mixed_sizes = {}
    for path in args.data:
        name = os.path.splitext(os.path.basename(path))[0]
        datasets.append((name, load_dataset(path)))
        if config.get("mixed_sizes"):
            mixed_sizes[name] = config["mixed_sizes"]

    approaches = []
    for label in args.approach:
        if label == "dal":
            approaches.append((label, evaluation.dal_approach(spec, n_jobs=1)))
        elif label.startswith("dal-"):
            kind = MODEL_KINDS.get(label[4:])
            if kind is None:
                raise ConfigError(f"unknown approach {label!r}")
            approaches.append((label, evaluation.dal_approach(LocalModelSpec(kind=kind))))
        elif label.startswith("global-"):
            kind = MODEL_KINDS.get(label[7:])
            if kind is None:
                raise ConfigError(f"unknown approach {label!r}")
            approaches.append((label, evaluation.global_approach(LocalModelSpec(kind=kind))))
        else:
            raise ConfigError(
                f"unknown approach {label!r}; use dal, dal-<model>, or global-<model>"
            )

    _progress(f"running {repeats} repeats x {len(tiers)} tiers x {len(datasets)} datasets")
    report = evaluation.run_experiment(
        datasets, approaches, tiers, repeats=repeats, master_seed=seed,
        mixed_sizes=mixed_sizes or None, n_jobs=args.jobs,
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        _progress(f"report written to {args.out}")
    if args.raw:
        with open(args.raw, "w", encoding="utf-8") as fh:
            fh.write(report.raw_csv())
        _progress(f"per-run results written to {args.raw}")
    print(report.to_text(), end="")
    return 0


def cmd_synth(args) -> int:
    spec = synth.LandscapeSpec(
        option_count=args.options,
        binary_count=args.binary,
        mode_bases=tuple(float(b) for b in args.bases.split(",")),
        spread=args.spread,
        inert_option_count=args.inert,
        seed=args.seed if args.seed is not None else 0,
    )
    dataset = synth.generate(spec, args.samples)
    save_dataset(dataset, args.out)
    _progress(f"{args.samples} samples written to {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="dal", description="Divide-and-learn configuration performance models")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="master seed (default 0 or config value)")
        p.add_argument("--config", default=None, help="optional JSON run config (mixed_sizes, seed, repeats)")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel workers")

    p_fit = sub.add_parser("fit", help="train a model and write its document")
    p_fit.add_argument("--data", required=True, help="training CSV (options..., performance)")
    p_fit.add_argument("--size", type=int, default=None, help="train on a random subset of this size")
    p_fit.add_argument("--tier", choices=SIZE_TIERS, default=None, help="train on a protocol-sized subset")
    p_fit.add_argument("--model", default="linear", help="local model kind (linear, cart, net)")
    p_fit.add_argument("--d", type=int, default=None, help="pin the division depth instead of adapting")
    p_fit.add_argument("--out", required=True, help="output model file")
    common(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_pred = sub.add_parser("predict", help="predict performance for query configurations")
    p_pred.add_argument("--model", required=True, help="model file from fit")
    p_pred.add_argument("--data", required=True, help="query CSV (option columns only, same order)")
    p_pred.add_argument("--out", default=None, help="output CSV (default: stdout)")
    p_pred.set_defaults(func=cmd_predict)

    p_adapt = sub.add_parser("adapt", help="show the depth-adaptation table")
    p_adapt.add_argument("--data", required=True)
    p_adapt.add_argument("--size", type=int, default=None)
    p_adapt.add_argument("--tier", choices=SIZE_TIERS, default=None)
    p_adapt.add_argument("--model", default="linear", help="local model whose size minimum applies")
    p_adapt.add_argument("--format", choices=["text", "csv"], default="text")
    common(p_adapt)
    p_adapt.set_defaults(func=cmd_adapt)

    p_exp = sub.add_parser("experiment", help="compare approaches over repeated runs")
    p_exp.add_argument("--data", action="append", required=True, help="dataset CSV (repeatable)")
    p_exp.add_argument("--approach", action="append", required=True,
                       help="dal, dal-<model>, or global-<model> (repeatable)")
    p_exp.add_argument("--model", default="linear", help="local model used by the plain 'dal' approach")
    p_exp.add_argument("--tiers", default=None, help="comma-separated tiers, e.g. S1,S2 (default S1)")
    p_exp.add_argument("--repeats", type=int, default=None, help="runs per cell (default 30)")
    p_exp.add_argument("--out", default=None, help="write the rank table as CSV")
    p_exp.add_argument("--raw", default=None, help="write per-run MREs as CSV")
    common(p_exp)
    p_exp.set_defaults(func=cmd_experiment)

    p_syn = sub.add_parser("synth", help="generate a synthetic landscape dataset")
    p_syn.add_argument("--out", required=True)
    p_syn.add_argument("--options", type=int, required=True, help="total option count")
    p_syn.add_argument("--binary", type=int, required=True, help="leading binary option count")
    p_syn.add_argument("--bases", required=True, help="comma-separated per-mode base performances")
    p_syn.add_argument("--spread", type=float, default=0.0, help="within-mode noise scale")
    p_syn.add_argument("--inert", type=int, default=0, help="trailing options with zero effect")
    p_syn.add_argument("--samples", type=int, required=True)
    p_syn.add_argument("--seed", type=int, default=None)
    p_syn.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"error:2: {exc}\n")
        return 2
    except DataError as exc:
        sys.stderr.write(f"error:3: {exc}\n")
        return 3
    except FileNotFoundError as exc:
        sys.stderr.write(f"error:3: {exc}\n")
        return 3
    except (DalError, Exception) as exc:  # noqa: BLE001 - last-resort mapping to exit code 1
        sys.stderr.write(f"error:1: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
