"""Uncertainty-driven labelling loop.

The loop trains an initial classifier on a small seed set, then
repeatedly scores the unlabelled pool with a noisy least-confidence
criterion, asks a label source for the top batch, retrains from scratch,
and records balanced accuracy on four views: the batch before training
on it, the batch after, the remaining pool, and held-out test sets.

Every random stream is derived from (run seed, iteration, purpose), so a
checkpointed run resumes onto exactly the same trajectory as an
uninterrupted one.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import metrics as string_metrics
from .classifiers import ForestParams, fit_forest, fit_stump
from .data import LabeledDataset, compute_metrics
from .siamese import TrainConfig, train as train_siamese
from .tensor import ArchConfig

PAPER_SCHEDULE = (100, 200, 400, 800, 800, 800, 1400, 1400)


class Strategy(Enum):
    LEAST_CONFIDENT = "lc"
    RANDOM = "random"


def uncertainty(yhat):
    """Distance of the predicted probability from certainty: 1/2 - |1/2 - ŷ|."""
    yhat = np.asarray(yhat, dtype=np.float64)
    return 0.5 - np.abs(0.5 - yhat)


def noisy_uncertainty(yhat, sigma: float, rng: np.random.Generator):
    """Uncertainty plus i.i.d. Normal(0, sigma) noise per sample."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    unc = uncertainty(yhat)
    if sigma == 0:
        return unc
    return unc + rng.normal(0.0, sigma, size=unc.shape)


def early_stop_check(acc_pre: float, acc_post: float, theta: float) -> bool:
    """True when pre/post-batch accuracies agree within theta."""
    if theta < 0:
        raise ValueError("theta must be >= 0")
    return abs(acc_post - acc_pre) < theta


# ---------------------------------------------------------------------------
# Learners

class Learner:
    """Classifier wrapper trained from scratch at each loop iteration."""

    def fit(self, pairs, labels):
        raise NotImplementedError

    def predict_proba(self, pairs) -> np.ndarray:
        raise NotImplementedError


class ForestLearner(Learner):
    """Random forest over the 9 string-similarity features.

    Feature vectors are cached per pair; the cache may be shared across
    learners operating on the same pair universe.
    """

    def __init__(self, params: ForestParams = None, feature_cache: dict = None):
        self.params = params or ForestParams()
        self.feature_cache = feature_cache if feature_cache is not None else {}
        self.model = None

    def _features(self, pairs) -> np.ndarray:
        rows = []
        for pair in pairs:
            key = (pair[0], pair[1])
            vec = self.feature_cache.get(key)
            if vec is None:
                vec = string_metrics.feature_vector(*key)
                self.feature_cache[key] = vec
            rows.append(vec)
        return np.asarray(rows, dtype=np.float64)

    def fit(self, pairs, labels):
        self.model = fit_forest(self._features(pairs), labels, self.params)

    def predict_proba(self, pairs) -> np.ndarray:
        return self.model.predict_proba_batch(self._features(pairs))


class StumpLearner(Learner):
    """Single-metric decision stump baseline."""

    def __init__(self, kind: string_metrics.MetricKind, feature_cache: dict = None):
        self.kind = kind
        self.feature_index = string_metrics.FEATURE_NAMES.index(kind.value)
        self._forest_cache = feature_cache if feature_cache is not None else {}
        self.model = None

    def _scores(self, pairs) -> np.ndarray:
        out = np.empty(len(pairs), dtype=np.float64)
        for k, pair in enumerate(pairs):
            key = (pair[0], pair[1])
            vec = self._forest_cache.get(key)
            if vec is None:
                vec = string_metrics.feature_vector(*key)
                self._forest_cache[key] = vec
            out[k] = vec[self.feature_index]
        return out

    def fit(self, pairs, labels):
        self.model = fit_stump(self._scores(pairs), labels)

    def predict_proba(self, pairs) -> np.ndarray:
        scores = self._scores(pairs)
        return np.where(
            scores <= self.model.threshold, self.model.left_prob, self.model.right_prob
        )


class SiameseLearner(Learner):
    def __init__(self, arch: ArchConfig = None, config: TrainConfig = None):
        self.arch = arch or ArchConfig()
        self.config = config or TrainConfig()
        self.model = None

    def fit(self, pairs, labels):
        self.model, _ = train_siamese(pairs, labels, config=self.config, arch=self.arch)

    def predict_proba(self, pairs) -> np.ndarray:
        return self.model.predict_batch(pairs)


def make_learner(kind: str, seed: int, feature_cache: dict = None, **kwargs) -> Learner:
    """Learner factory; the seed feeds the learner's own training RNG."""
    if kind == "forest":
        params = ForestParams(seed=seed, **kwargs.get("forest", {}))
        return ForestLearner(params, feature_cache=feature_cache)
    if kind == "stump":
        metric = string_metrics.MetricKind(kwargs.get("metric", "jaro_winkler"))
        return StumpLearner(metric, feature_cache=feature_cache)
    if kind == "siamese":
        arch = ArchConfig(**kwargs.get("arch", {}))
        config = TrainConfig(seed=seed, **kwargs.get("train", {}))
        return SiameseLearner(arch, config)
    raise ValueError(f"unknown learner kind {kind!r}")


# ---------------------------------------------------------------------------
# Label sources

class LabelSource:
    def get_labels(self, indices) -> np.ndarray:
        raise NotImplementedError


class StoredOracle(LabelSource):
    """Labels pre-recorded for the whole pair universe."""

    def __init__(self, labels):
        self.labels = np.asarray(labels, dtype=np.int64)

    def get_labels(self, indices) -> np.ndarray:
        return self.labels[np.asarray(indices, dtype=np.int64)]


# ---------------------------------------------------------------------------
# Run state and engine

@dataclass
class StepRecord:
    step: int
    n_labelled: int
    ba_pre: float  # C^j on the incoming batch (nan at step 0)
    ba_post: float  # C^{j+1} on the just-labelled batch (nan at step 0)
    ba_pool: float  # C^{j+1} on the remaining unlabelled pool (nan when empty)
    ba_tests: dict  # test-set name -> BA of C^{j+1}

    def to_row(self, test_names) -> list:
        return [self.step, self.n_labelled, self.ba_pre, self.ba_post, self.ba_pool] + [
            self.ba_tests.get(name, float("nan")) for name in test_names
        ]


@dataclass
class ALState:
    labelled: list  # universe indices, insertion order preserved
    labels: list  # labels aligned with `labelled`
    pool: list  # remaining universe indices, stable order
    iteration: int = 0
    pending_batch: list = None  # selected but not yet labelled
    history: list = field(default_factory=list)

    def check_partition(self, universe_size: int):
        labelled, pool = set(self.labelled), set(self.pool)
        assert len(self.labelled) + len(self.pool) == universe_size
        assert not labelled & pool
        assert labelled | pool == set(range(universe_size))
        # a pending batch is still part of the pool until its labels arrive
        assert set(self.pending_batch or []) <= pool


def select_batch(scores_or_pool, batch_size: int, strategy: Strategy,
                 rng: np.random.Generator, scores: np.ndarray = None) -> list:
    """Pick batch indices (positions into the pool list).

    LEAST_CONFIDENT takes the top-B by score with ties broken by stable
    pool order; RANDOM samples uniformly without replacement.
    """
    pool = scores_or_pool
    n = len(pool)
    take = min(batch_size, n)
    if take == 0:
        return []
    if strategy is Strategy.RANDOM:
        chosen = rng.choice(n, size=take, replace=False)
        return sorted(int(i) for i in chosen)
    order = np.argsort(-np.asarray(scores), kind="stable")
    return sorted(int(i) for i in order[:take])


@dataclass
class RunConfig:
    schedule: tuple = PAPER_SCHEDULE
    strategy: Strategy = Strategy.LEAST_CONFIDENT
    sigma: float = 1.0 / 6.0
    seed: int = 0
    learner_kind: str = "forest"
    learner_kwargs: dict = field(default_factory=dict)
    theta: float = 0.01
    early_stopping: bool = False


class ALRun:
    """Stepwise active-learning engine over an indexed pair universe.

    Drive it either with :func:`al_run` plus a label source, or
    interactively (the HTTP labelling service): ``start()``, then
    alternate ``propose_batch()`` and ``submit_labels()``.
    """

    def __init__(self, dataset: LabeledDataset, seed_indices, config: RunConfig,
                 test_sets: dict = None, feature_cache: dict = None):
        self.dataset = dataset
        self.config = config
        self.test_sets = test_sets or {}
        self.feature_cache = feature_cache if feature_cache is not None else {}
        seed_set = sorted(int(i) for i in seed_indices)
        pool = [i for i in range(len(dataset)) if i not in set(seed_set)]
        self.state = ALState(labelled=list(seed_set), labels=[], pool=pool, pending_batch=[])
        self.learner = None
        self._started = False

    # -- internals ----------------------------------------------------------

    def _rng(self, purpose: str, iteration: int) -> np.random.Generator:
        # crc32 keeps the stream derivation stable across interpreter runs
        return np.random.default_rng(
            [self.config.seed, iteration, zlib.crc32(purpose.encode("utf-8"))]
        )

    def _pairs(self, indices) -> list:
        return [self.dataset.pairs[i] for i in indices]

    def _train(self, iteration: int):
        learner = make_learner(
            self.config.learner_kind,
            seed=int(np.random.default_rng([self.config.seed, iteration]).integers(2 ** 31)),
            feature_cache=self.feature_cache,
            **self.config.learner_kwargs,
        )
        learner.fit(self._pairs(self.state.labelled), np.asarray(self.state.labels))
        self.learner = learner

    def _ba(self, pairs, labels) -> float:
        if len(pairs) == 0:
            return float("nan")
        yhat = self.learner.predict_proba(pairs)
        return compute_metrics(yhat, labels).balanced_accuracy

    def _eval_tests(self) -> dict:
        return {
            name: self._ba(ds.pairs, ds.labels) for name, ds in self.test_sets.items()
        }

    # -- stepwise API -------------------------------------------------------

    def start(self, seed_labels):
        """Train C^1 on the seed set and record the step-0 evaluation."""
        if self._started:
            raise RuntimeError("run already started")
        self.state.labels = [int(v) for v in seed_labels]
        if len(self.state.labels) != len(self.state.labelled):
            raise ValueError("seed labels must match seed indices")
        self._train(0)
        pool_pairs = self._pairs(self.state.pool)
        pool_labels = self.dataset.labels[self.state.pool]
        self.state.history.append(
            StepRecord(
                step=0,
                n_labelled=len(self.state.labelled),
                ba_pre=float("nan"),
                ba_post=float("nan"),
                ba_pool=self._ba(pool_pairs, pool_labels),
                ba_tests=self._eval_tests(),
            )
        )
        self._started = True

    @property
    def finished(self) -> bool:
        return self._started and self.state.iteration >= len(self.config.schedule)

    def propose_batch(self) -> list:
        """Select the next batch; returns universe indices awaiting labels."""
        if not self._started:
            raise RuntimeError("call start() first")
        if self.state.pending_batch:
            return list(self.state.pending_batch)
        if self.finished or not self.state.pool:
            return []
        j = self.state.iteration + 1
        batch_size = self.config.schedule[j - 1]
        if self.config.strategy is Strategy.LEAST_CONFIDENT:
            yhat = self.learner.predict_proba(self._pairs(self.state.pool))
            scores = noisy_uncertainty(yhat, self.config.sigma, self._rng("noise", j))
            positions = select_batch(self.state.pool, batch_size,
                                     Strategy.LEAST_CONFIDENT, None, scores=scores)
        else:
            positions = select_batch(self.state.pool, batch_size,
                                     Strategy.RANDOM, self._rng("select", j))
        self.state.pending_batch = [self.state.pool[p] for p in positions]
        return list(self.state.pending_batch)

    def batch_uncertainties(self) -> dict:
        """Clean uncertainty of the current model on the pending batch."""
        batch = self.state.pending_batch or []
        if not batch:
            return {}
        yhat = self.learner.predict_proba(self._pairs(batch))
        unc = uncertainty(yhat)
        return {idx: float(u) for idx, u in zip(batch, unc)}

    def submit_labels(self, labels) -> StepRecord:
        """Integrate labels for the pending batch, retrain, evaluate."""
        batch = self.state.pending_batch
        if not batch:
            raise RuntimeError("no pending batch")
        labels = [int(v) for v in labels]
        if len(labels) != len(batch):
            raise ValueError("labels must cover the whole pending batch")
        j = self.state.iteration + 1

        batch_pairs = self._pairs(batch)
        ba_pre = self._ba(batch_pairs, np.asarray(labels))

        batch_set = set(batch)
        self.state.pool = [i for i in self.state.pool if i not in batch_set]
        self.state.labelled.extend(batch)
        self.state.labels.extend(labels)
        self.state.pending_batch = []
        self.state.iteration = j

        self._train(j)
        ba_post = self._ba(batch_pairs, np.asarray(labels))
        pool_labels = self.dataset.labels[self.state.pool]
        record = StepRecord(
            step=j,
            n_labelled=len(self.state.labelled),
            ba_pre=ba_pre,
            ba_post=ba_post,
            ba_pool=self._ba(self._pairs(self.state.pool), pool_labels),
            ba_tests=self._eval_tests(),
        )
        self.state.history.append(record)
        return record

    # -- history export -----------------------------------------------------

    def history_rows(self):
        test_names = sorted(self.test_sets)
        header = ["step", "n_labelled", "ba_pre", "ba_post", "ba_pool"] + [
            f"ba_{name}" for name in test_names
        ]
        rows = [r.to_row(test_names) for r in self.state.history]
        return header, rows


def al_run(dataset: LabeledDataset, seed_indices, config: RunConfig,
           labels: LabelSource, test_sets: dict = None,
           feature_cache: dict = None) -> ALRun:
    """Run the whole loop headlessly against a label source."""
    run = ALRun(dataset, seed_indices, config, test_sets, feature_cache)
    run.start(labels.get_labels(run.state.labelled))
    while not run.finished:
        batch = run.propose_batch()
        if not batch:
            break
        record = run.submit_labels(labels.get_labels(batch))
        if config.early_stopping and not (
            np.isnan(record.ba_pre) or np.isnan(record.ba_post)
        ):
            if early_stop_check(record.ba_pre, record.ba_post, config.theta):
                break
    return run
