"""Decision stump baselines and a depth-limited random forest.

Both are trained with class-balanced sample weights (each class weighted
inversely to its frequency).  Splits are searched over midpoints of
consecutive sorted distinct feature values, minimising weighted Gini
impurity; ties break on lowest feature index, then smallest threshold,
so fitting is fully deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class DegenerateTrainingError(ValueError):
    """Training set cannot be split (single class or constant features)."""


def balanced_weights(labels: np.ndarray) -> np.ndarray:
    """Per-sample weights n / (n_classes * n_class), sklearn's 'balanced'."""
    labels = np.asarray(labels)
    n = labels.size
    w = np.empty(n, dtype=np.float64)
    for cls in (0, 1):
        mask = labels == cls
        count = mask.sum()
        if count:
            w[mask] = n / (2.0 * count)
    return w


def _weighted_gini(pos_w: float, total_w: float) -> float:
    if total_w <= 0:
        return 0.0
    p = pos_w / total_w
    return 2.0 * p * (1.0 - p)


def _best_split(values: np.ndarray, labels: np.ndarray, weights: np.ndarray):
    """Best midpoint threshold for one feature.

    Returns (threshold, weighted_impurity_after, impurity_decrease) or
    None when all values are identical.
    """
    order = np.argsort(values, kind="stable")
    v = values[order]
    y = labels[order]
    w = weights[order]

    total_w = w.sum()
    total_pos = (w * y).sum()
    parent = _weighted_gini(total_pos, total_w)

    cum_w = np.cumsum(w)
    cum_pos = np.cumsum(w * y)

    # candidate boundaries: positions where the sorted value changes
    change = np.nonzero(v[1:] > v[:-1])[0]
    if change.size == 0:
        return None

    left_w = cum_w[change]
    left_pos = cum_pos[change]
    right_w = total_w - left_w
    right_pos = total_pos - left_pos

    p_l = np.divide(left_pos, left_w, out=np.zeros_like(left_pos), where=left_w > 0)
    p_r = np.divide(right_pos, right_w, out=np.zeros_like(right_pos), where=right_w > 0)
    child = (left_w * 2 * p_l * (1 - p_l) + right_w * 2 * p_r * (1 - p_r)) / total_w

    best = int(np.argmin(child))  # argmin takes the first minimum: smallest threshold
    threshold = (v[change[best]] + v[change[best] + 1]) / 2.0
    return threshold, float(child[best]), parent - float(child[best])


@dataclass
class DecisionStump:
    """One-split tree: predict left_prob below the threshold, right_prob above."""

    feature_index: int
    threshold: float
    left_prob: float
    right_prob: float

    def predict_proba(self, x) -> float:
        value = x if np.isscalar(x) else np.asarray(x, dtype=np.float64)[self.feature_index]
        return self.left_prob if value <= self.threshold else self.right_prob

    def predict_proba_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        col = X[:, self.feature_index]
        return np.where(col <= self.threshold, self.left_prob, self.right_prob)

    def to_dict(self) -> dict:
        return {
            "kind": "stump",
            "feature_index": self.feature_index,
            "threshold": self.threshold,
            "left_prob": self.left_prob,
            "right_prob": self.right_prob,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionStump":
        return cls(d["feature_index"], d["threshold"], d["left_prob"], d["right_prob"])


def fit_stump(scores, labels, feature_index: int = 0) -> DecisionStump:
    """Fit a single-split stump on one score column.

    Raises DegenerateTrainingError when only one class is present or all
    scores are identical.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.size == 0 or len(set(labels.tolist())) < 2:
        raise DegenerateTrainingError("stump training needs both classes")
    weights = balanced_weights(labels)
    split = _best_split(scores, labels, weights)
    if split is None:
        raise DegenerateTrainingError("all scores identical; no valid split point")
    threshold, _, _ = split
    left = scores <= threshold
    lw, rw = weights[left], weights[~left]
    ly, ry = labels[left], labels[~left]
    left_prob = float((lw * ly).sum() / lw.sum())
    right_prob = float((rw * ry).sum() / rw.sum())
    return DecisionStump(feature_index, float(threshold), left_prob, right_prob)


@dataclass
class ForestParams:
    max_depth: int = 3
    n_trees: int = 100
    features_per_split: int = 3  # ceil(sqrt(9)) for the 9-feature vector
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.max_depth < 1 or self.n_trees < 1:
            raise ValueError("max_depth and n_trees must be >= 1")


@dataclass
class _Node:
    # internal node when feature >= 0, else leaf carrying prob
    feature: int = -1
    threshold: float = 0.0
    prob: float = 0.5
    left: "_Node" = None
    right: "_Node" = None

    def to_dict(self) -> dict:
        if self.feature < 0:
            return {"prob": self.prob}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "_Node":
        if "feature" not in d:
            return cls(prob=d["prob"])
        return cls(
            feature=d["feature"],
            threshold=d["threshold"],
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


def _grow_tree(X, y, w, depth, params, rng, importance, total_weight):
    node = _Node()
    pos_w = float((w * y).sum())
    tot_w = float(w.sum())
    node.prob = pos_w / tot_w if tot_w > 0 else 0.5

    if depth >= params.max_depth or y.size < 2 or node.prob in (0.0, 1.0):
        return node

    n_features = X.shape[1]
    k = min(params.features_per_split, n_features)
    candidates = rng.choice(n_features, size=k, replace=False)
    candidates.sort()  # evaluate in index order so ties pick the lowest index

    best = None
    for f in candidates:
        split = _best_split(X[:, f], y, w)
        if split is None:
            continue
        threshold, child_imp, decrease = split
        if best is None or child_imp < best[2]:
            best = (int(f), threshold, child_imp, decrease)
    if best is None:
        return node

    f, threshold, _, decrease = best
    importance[f] += (tot_w / total_weight) * decrease

    mask = X[:, f] <= threshold
    node.feature = f
    node.threshold = threshold
    node.left = _grow_tree(X[mask], y[mask], w[mask], depth + 1, params, rng, importance, total_weight)
    node.right = _grow_tree(X[~mask], y[~mask], w[~mask], depth + 1, params, rng, importance, total_weight)
    return node


def _predict_node(node: _Node, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if idx.size == 0:
            continue
        if nd.feature < 0:
            out[idx] = nd.prob
        else:
            mask = X[idx, nd.feature] <= nd.threshold
            stack.append((nd.left, idx[mask]))
            stack.append((nd.right, idx[~mask]))
    return out


@dataclass
class Forest:
    trees: list
    params: ForestParams
    importance_raw: np.ndarray = field(default_factory=lambda: np.zeros(9))

    def predict_proba(self, x) -> float:
        return float(self.predict_proba_batch(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])

    def predict_proba_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        acc = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees:
            acc += _predict_node(tree, X)
        return acc / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "kind": "forest",
            "params": {
                "max_depth": self.params.max_depth,
                "n_trees": self.params.n_trees,
                "features_per_split": self.params.features_per_split,
                "bootstrap": self.params.bootstrap,
                "seed": self.params.seed,
            },
            "importance_raw": self.importance_raw.tolist(),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        return cls(
            trees=[_Node.from_dict(t) for t in d["trees"]],
            params=ForestParams(**d["params"]),
            importance_raw=np.asarray(d["importance_raw"], dtype=np.float64),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "Forest":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def fit_forest(features, labels, params: ForestParams = None) -> Forest:
    """Fit a bootstrap forest of depth-limited trees with balanced weights."""
    if params is None:
        params = ForestParams()
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2:
        raise ValueError("features must be a 2-d array")
    if y.size < 2 or len(set(y.tolist())) < 2:
        raise DegenerateTrainingError("forest training needs both classes")

    weights = balanced_weights(y)
    seeds = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = []
    importance = np.zeros(X.shape[1], dtype=np.float64)
    for tree_seed in seeds:
        rng = np.random.default_rng(tree_seed)
        if params.bootstrap:
            idx = rng.integers(0, y.size, size=y.size)
        else:
            idx = np.arange(y.size)
        tree_importance = np.zeros(X.shape[1], dtype=np.float64)
        w = weights[idx]
        tree = _grow_tree(X[idx], y[idx], w, 0, params, rng, tree_importance, w.sum())
        importance += tree_importance
        trees.append(tree)
    return Forest(trees=trees, params=params, importance_raw=importance / params.n_trees)


@dataclass
class ImportanceReport:
    importances: np.ndarray  # normalised, sums to 1

    def to_dict(self) -> dict:
        return {"importances": self.importances.tolist()}


def mdi_importance(forest: Forest) -> ImportanceReport:
    """Normalised mean-decrease-impurity (Gini) feature importances."""
    raw = forest.importance_raw
    total = raw.sum()
    if total <= 0:
        return ImportanceReport(importances=np.zeros_like(raw))
    return ImportanceReport(importances=raw / total)
