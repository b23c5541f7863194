"""Checkpointing of active-learning runs and history CSV export.

A checkpoint is a single ``.npz`` container: a JSON metadata blob with
the run config, loop state, and dataset records, plus the current
model's parameter arrays when the learner is the Siamese network (tree
models serialize inside the metadata).  Saves are atomic (temp file +
rename); resuming reproduces the uninterrupted trajectory because all
randomness is derived from (seed, iteration).
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .active import ALRun, ALState, RunConfig, StepRecord, Strategy
from .data import LabeledDataset
from .siamese import SiameseModel

CHECKPOINT_VERSION = "namematch-alrun-1"


def _config_to_dict(config: RunConfig) -> dict:
    return {
        "schedule": list(config.schedule),
        "strategy": config.strategy.value,
        "sigma": config.sigma,
        "seed": config.seed,
        "learner_kind": config.learner_kind,
        "learner_kwargs": config.learner_kwargs,
        "theta": config.theta,
        "early_stopping": config.early_stopping,
    }


def _config_from_dict(d: dict) -> RunConfig:
    return RunConfig(
        schedule=tuple(d["schedule"]),
        strategy=Strategy(d["strategy"]),
        sigma=d["sigma"],
        seed=d["seed"],
        learner_kind=d["learner_kind"],
        learner_kwargs=d["learner_kwargs"],
        theta=d["theta"],
        early_stopping=d["early_stopping"],
    )


def save_run(run: ALRun, path):
    state = run.state
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": _config_to_dict(run.config),
        "dataset": [list(r) for r in run.dataset.records],
        "test_sets": {name: [list(r) for r in ds.records] for name, ds in run.test_sets.items()},
        "state": {
            "labelled": state.labelled,
            "labels": state.labels,
            "pool": state.pool,
            "iteration": state.iteration,
            "pending_batch": state.pending_batch or [],
            "started": run._started,
            "history": [
                {
                    "step": r.step,
                    "n_labelled": r.n_labelled,
                    "ba_pre": r.ba_pre,
                    "ba_post": r.ba_post,
                    "ba_pool": r.ba_pool,
                    "ba_tests": r.ba_tests,
                }
                for r in state.history
            ],
        },
    }
    payload = {"__meta__": np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)}
    model = getattr(run.learner, "model", None)
    if model is not None:
        if isinstance(model, SiameseModel):
            for name, arr in model.params.arrays.items():
                payload[f"model__{name}"] = arr
        elif hasattr(model, "to_dict"):  # forest / stump
            payload["__model_json__"] = np.frombuffer(
                json.dumps(model.to_dict()).encode("utf-8"), dtype=np.uint8
            )

    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".npz.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, **payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_run(path) -> ALRun:
    """Rebuild a run from a checkpoint; the current model is retrained."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode("utf-8"))
    if meta["version"] != CHECKPOINT_VERSION:
        raise ValueError(
            f"checkpoint version {meta['version']!r} not supported "
            f"(expected {CHECKPOINT_VERSION!r})"
        )
    dataset = LabeledDataset([tuple(r) for r in meta["dataset"]])
    test_sets = {
        name: LabeledDataset([tuple(r) for r in recs])
        for name, recs in meta["test_sets"].items()
    }
    config = _config_from_dict(meta["config"])
    st = meta["state"]

    run = ALRun(dataset, st["labelled"], config, test_sets)
    run.state = ALState(
        labelled=list(st["labelled"]),
        labels=list(st["labels"]),
        pool=list(st["pool"]),
        iteration=st["iteration"],
        pending_batch=list(st["pending_batch"]),
        history=[
            StepRecord(
                step=r["step"],
                n_labelled=r["n_labelled"],
                ba_pre=r["ba_pre"],
                ba_post=r["ba_post"],
                ba_pool=r["ba_pool"],
                ba_tests=r["ba_tests"],
            )
            for r in st["history"]
        ],
    )
    run._started = st["started"]
    if run._started:
        # deterministic retrain of C^{iteration+1} on the labelled set
        run._train(run.state.iteration)
    return run


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".12g")
    return str(value)


def write_history_csv(run: ALRun, path):
    header, rows = run.history_rows()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
