"""HTTP labelling service for a live active-learning run.

One service instance owns one run and serves a single annotator.  All
state mutations are serialized through a lock; request handlers read
snapshots.  Endpoints live under /api and return JSON with a
``schema_version`` field:

  GET  /api/run     status, iteration, progress, history summary
  GET  /api/batch   pending label tasks, sorted by issue-time uncertainty
  POST /api/labels  submit labels ({"labels": [{"task_id", "label"}]});
                    partial batches accepted; completing the batch
                    retrains and issues the next one
  GET  /api/curve   per-step balanced-accuracy history for plotting
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .active import ALRun
from .checkpoint import save_run, write_history_csv

SCHEMA_VERSION = 1

STATUS_AWAITING = "AwaitingLabels"
STATUS_TRAINING = "Training"
STATUS_EVALUATING = "Evaluating"
STATUS_DONE = "Done"
STATUS_ABORTED = "Aborted"


@dataclass
class LabelTask:
    task_id: str
    pair_index: int
    name_a: str
    name_b: str
    iteration: int
    uncertainty: float
    label: int = None


class LabelItem(BaseModel):
    task_id: str
    label: int = Field(ge=0, le=1)


class LabelBatch(BaseModel):
    labels: list[LabelItem]


def _clean_nan(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class RunService:
    """Owns the run state machine behind the HTTP handlers."""

    def __init__(self, run: ALRun, checkpoint_path=None, history_csv=None):
        self.run = run
        self.checkpoint_path = checkpoint_path
        self.history_csv = history_csv
        self.lock = threading.Lock()
        self.status = STATUS_TRAINING
        self.tasks: dict[str, LabelTask] = {}
        self.task_order: list[str] = []

    def start(self, seed_labels):
        with self.lock:
            if not self.run._started:
                self.run.start(seed_labels)
            self._issue_batch()

    def _issue_batch(self):
        self.tasks = {}
        self.task_order = []
        if self.run.finished:
            self.status = STATUS_DONE
            return
        batch = self.run.propose_batch()
        if not batch:
            self.status = STATUS_DONE
            return
        unc = self.run.batch_uncertainties()
        iteration = self.run.state.iteration + 1
        ordered = sorted(batch, key=lambda i: (-unc[i], batch.index(i)))
        for idx in ordered:
            a, b = self.run.dataset.pairs[idx]
            task = LabelTask(
                task_id=f"{iteration}-{idx}",
                pair_index=idx,
                name_a=a,
                name_b=b,
                iteration=iteration,
                uncertainty=unc[idx],
            )
            self.tasks[task.task_id] = task
            self.task_order.append(task.task_id)
        self.status = STATUS_AWAITING

    def pending_tasks(self) -> list:
        return [self.tasks[tid] for tid in self.task_order if self.tasks[tid].label is None]

    def submit(self, items: list) -> tuple:
        """Apply a (possibly partial) batch of labels; returns (ok, error)."""
        with self.lock:
            if self.status != STATUS_AWAITING:
                return False, (409, f"run is {self.status}, not awaiting labels")
            seen = set()
            for item in items:
                if item.task_id in seen:
                    return False, (409, f"duplicate task_id {item.task_id} in request")
                seen.add(item.task_id)
                task = self.tasks.get(item.task_id)
                if task is None:
                    return False, (409, f"unknown task_id {item.task_id}")
                if task.label is not None:
                    return False, (409, f"task {item.task_id} already labelled")
            for item in items:
                self.tasks[item.task_id].label = item.label
            if not self.pending_tasks():
                self._advance()
            return True, None

    def _advance(self):
        self.status = STATUS_TRAINING
        # submit in the engine's batch order, not display order
        batch = self.run.state.pending_batch
        by_index = {self.tasks[tid].pair_index: self.tasks[tid].label for tid in self.task_order}
        self.run.submit_labels([by_index[i] for i in batch])
        self.status = STATUS_EVALUATING
        if self.checkpoint_path:
            save_run(self.run, self.checkpoint_path)
        if self.history_csv:
            write_history_csv(self.run, self.history_csv)
        self._issue_batch()

    # -- payloads -----------------------------------------------------------

    def run_payload(self) -> dict:
        state = self.run.state
        return {
            "schema_version": SCHEMA_VERSION,
            "status": self.status,
            "iteration": state.iteration,
            "n_labelled": len(state.labelled),
            "pool_size": len(state.pool),
            "remaining_tasks": len(self.pending_tasks()),
            "total_iterations": len(self.run.config.schedule),
            "steps_recorded": len(state.history),
        }

    def batch_payload(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "iteration": self.run.state.iteration + 1 if self.tasks else self.run.state.iteration,
            "remaining": len(self.pending_tasks()),
            "tasks": [
                {
                    "task_id": t.task_id,
                    "name_a": t.name_a,
                    "name_b": t.name_b,
                    "uncertainty": t.uncertainty,
                }
                for t in self.pending_tasks()
            ],
        }

    def curve_payload(self) -> dict:
        test_names = sorted(self.run.test_sets)
        return {
            "schema_version": SCHEMA_VERSION,
            "test_names": test_names,
            "steps": [
                {
                    "step": r.step,
                    "n_labelled": r.n_labelled,
                    "ba_pre": _clean_nan(r.ba_pre),
                    "ba_post": _clean_nan(r.ba_post),
                    "ba_pool": _clean_nan(r.ba_pool),
                    "ba_tests": {k: _clean_nan(v) for k, v in r.ba_tests.items()},
                }
                for r in self.run.state.history
            ],
        }


def create_app(service: RunService) -> FastAPI:
    app = FastAPI(title="namematch labelling service")
    app.state.service = service

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request body"})

    @app.get("/api/run")
    def get_run():
        return service.run_payload()

    @app.get("/api/batch")
    def get_batch():
        return service.batch_payload()

    @app.get("/api/curve")
    def get_curve():
        return service.curve_payload()

    @app.post("/api/labels")
    def post_labels(batch: LabelBatch):
        ok, error = service.submit(batch.labels)
        if not ok:
            code, message = error
            return JSONResponse(status_code=code, content={"error": message})
        return service.run_payload()

    return app


def build_service(config_path) -> FastAPI:
    """CLI entry: wire a run config JSON to a ready-to-serve app."""
    from .active import StoredOracle
    from .cli import load_run_config

    dataset, seed_indices, config, test_sets, outputs = load_run_config(config_path)
    run = ALRun(dataset, seed_indices, config, test_sets)
    service = RunService(
        run,
        checkpoint_path=outputs.get("checkpoint"),
        history_csv=outputs.get("history_csv"),
    )
    oracle = StoredOracle(dataset.labels)
    service.start(oracle.get_labels(run.state.labelled))
    return create_app(service)
