"""Command-line entry points.

Subcommands map 1:1 onto the library operations: ``metrics``, ``train``,
``predict``, ``eval``, ``split``, ``synth``, ``al-run``, and ``serve``.
Every command that uses randomness accepts ``--seed``; outputs are JSON
on stdout (or files) and the exit code is 0 on success.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import metrics as string_metrics
from .active import PAPER_SCHEDULE, RunConfig, StoredOracle, Strategy, al_run
from .checkpoint import save_run, write_history_csv
from .classifiers import DecisionStump, Forest, ForestParams, fit_forest, fit_stump
from .data import (
    LabeledDataset,
    SynthConfig,
    build_jo_testset,
    compute_metrics,
    load_pairs,
    stratified_folds,
    synth_generate,
)
from .siamese import SiameseModel, TrainConfig, train as train_siamese
from .tensor import ArchConfig
from .textprep import CleanMode, clean


def _load_model(path):
    if str(path).endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        if d.get("kind") == "stump":
            return DecisionStump.from_dict(d)
        if d.get("kind") == "forest":
            return Forest.from_dict(d)
        raise SystemExit(f"unrecognized model kind in {path}")
    return SiameseModel.load(path)


def _predict_pairs(model, pairs) -> np.ndarray:
    if isinstance(model, SiameseModel):
        return model.predict_batch(pairs)
    X = np.asarray([string_metrics.feature_vector(a, b) for a, b in pairs])
    if isinstance(model, DecisionStump):
        return model.predict_proba_batch(X)
    return model.predict_proba_batch(X)


def pick_seed_indices(dataset: LabeledDataset, size: int, seed: int) -> list:
    """Stratified seed-set selection preserving the global class ratio."""
    labels = dataset.labels
    rng = np.random.default_rng(seed)
    chosen = []
    for cls in (0, 1):
        idx = np.nonzero(labels == cls)[0]
        n_take = int(round(size * len(idx) / len(dataset)))
        n_take = min(max(n_take, 1), len(idx))
        chosen.extend(int(i) for i in rng.permutation(idx)[:n_take])
    return sorted(chosen)


def cmd_metrics(args) -> int:
    a = clean(args.a, CleanMode.CLASSIC)
    b = clean(args.b, CleanMode.CLASSIC)
    if args.kind:
        kind = string_metrics.MetricKind(args.kind)
        out = {kind.value: string_metrics.score(kind, a, b)}
    else:
        out = string_metrics.all_scores(a, b)
    print(json.dumps(out))
    return 0


def cmd_train(args) -> int:
    ds = load_pairs(args.train)
    if args.model == "stump":
        kind = string_metrics.MetricKind(args.metric)
        col = string_metrics.FEATURE_NAMES.index(kind.value)
        X = np.asarray([string_metrics.feature_vector(a, b) for a, b in ds.pairs])
        model = fit_stump(X[:, col], ds.labels, feature_index=col)
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(model.to_dict(), fh)
    elif args.model == "forest":
        X = np.asarray([string_metrics.feature_vector(a, b) for a, b in ds.pairs])
        model = fit_forest(X, ds.labels, ForestParams(seed=args.seed))
        model.save(args.out)
    elif args.model == "siamese":
        config = TrainConfig(
            seed=args.seed,
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
        )
        arch = ArchConfig(seq_len=args.seq_len)
        model, history = train_siamese(ds.pairs, ds.labels, config=config, arch=arch,
                                       verbose=args.verbose)
        model.save(args.out)
        print(json.dumps({"final_loss": history[-1], "epochs": len(history)}))
    else:
        raise SystemExit(f"unknown model {args.model}")
    return 0


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    yhat = _predict_pairs(model, [(args.a, args.b)])
    print(json.dumps({"y_hat": float(yhat[0])}))
    return 0


def cmd_eval(args) -> int:
    model = _load_model(args.model)
    ds = load_pairs(args.test)
    yhat = _predict_pairs(model, ds.pairs)
    report = compute_metrics(yhat, ds.labels, threshold=args.threshold)
    print(json.dumps(report.to_dict()))
    return 0


def cmd_split(args) -> int:
    ds = load_pairs(args.input)
    plan = stratified_folds(ds, k=args.k, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    for i, fold in enumerate(plan.folds):
        fold.test.save(os.path.join(args.out, f"fold{i}_test.csv"))
        fold.train_large.save(os.path.join(args.out, f"fold{i}_train_large.csv"))
        fold.train_medium.save(os.path.join(args.out, f"fold{i}_train_medium.csv"))
        fold.train_small.save(os.path.join(args.out, f"fold{i}_train_small.csv"))
        if args.jo:
            build_jo_testset(fold.test).save(os.path.join(args.out, f"fold{i}_test_jo.csv"))
    print(json.dumps({"folds": plan.k, "out": args.out}))
    return 0


def cmd_synth(args) -> int:
    config = SynthConfig(
        seed=args.seed,
        corpus_size=args.corpus_size,
        positive_fraction=args.positive_fraction,
        noisy=args.noisy,
    )
    ds = synth_generate(config, args.n)
    ds.save(args.out)
    print(json.dumps({"n": len(ds), "positive_ratio": ds.positive_ratio, "out": args.out}))
    return 0


def load_run_config(path):
    """Build (dataset, seed indices, RunConfig, test sets, outputs) from run JSON."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    dataset = load_pairs(doc["train_csv"])
    seed = doc.get("seed", 0)
    schedule = doc.get("schedule", "paper")
    if schedule == "paper":
        schedule = PAPER_SCHEDULE
    learner = doc.get("learner", {"kind": "forest"})
    config = RunConfig(
        schedule=tuple(schedule),
        strategy=Strategy(doc.get("strategy", "lc")),
        sigma=doc.get("sigma", 1.0 / 6.0),
        seed=seed,
        learner_kind=learner.get("kind", "forest"),
        learner_kwargs={k: v for k, v in learner.items() if k != "kind"},
        theta=doc.get("theta", 0.01),
        early_stopping=doc.get("early_stopping", False),
    )
    seed_indices = doc.get("seed_indices")
    if seed_indices is None:
        seed_indices = pick_seed_indices(dataset, doc.get("seed_size", 100), seed)
    test_sets = {
        name: load_pairs(p) for name, p in doc.get("test_sets", {}).items()
    }
    outputs = {
        "history_csv": doc.get("history_csv"),
        "checkpoint": doc.get("checkpoint"),
    }
    return dataset, seed_indices, config, test_sets, outputs


def cmd_al_run(args) -> int:
    dataset, seed_indices, config, test_sets, outputs = load_run_config(args.config)
    oracle = StoredOracle(dataset.labels)
    run = al_run(dataset, seed_indices, config, oracle, test_sets)
    if outputs["history_csv"]:
        write_history_csv(run, outputs["history_csv"])
    if outputs["checkpoint"]:
        save_run(run, outputs["checkpoint"])
    n_labelled = [r.n_labelled for r in run.state.history]
    print(json.dumps({"steps": len(run.state.history), "n_labelled": n_labelled}))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_service

    app = build_service(args.config)
    port = args.port or int(os.environ.get("NAMEMATCH_PORT", "8000"))
    uvicorn.run(app, host=args.host, port=port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="namematch")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="string similarity scores for one pair")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--kind", choices=[k.value for k in string_metrics.MetricKind])
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("train", help="fit a stump, forest, or siamese model")
    p.add_argument("--model", required=True, choices=["stump", "forest", "siamese"])
    p.add_argument("--train", required=True, help="pair CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--metric", default="jaro_winkler",
                   choices=[k.value for k in string_metrics.MetricKind])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--seq-len", type=int, default=300)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score one pair with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="metrics report of a model on a test CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("split", help="stratified folds with nested train sets")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jo", action="store_true", help="also emit JW-ordered test subsets")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("synth", help="generate a synthetic labelled pair CSV")
    p.add_argument("--out", required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corpus-size", type=int, default=600)
    p.add_argument("--positive-fraction", type=float, default=0.5)
    p.add_argument("--noisy", action="store_true", help="domain-shift style noise")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("al-run", help="headless active-learning run from a config")
    p.add_argument("--config", required=True, help="run config JSON")
    p.set_defaults(func=cmd_al_run)

    p = sub.add_parser("serve", help="labelling service for a live run")
    p.add_argument("--config", required=True)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
