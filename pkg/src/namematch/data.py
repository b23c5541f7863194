"""Dataset ingestion, splits, synthetic pair generation, and metrics.

The split machinery mirrors the experimental protocol: stratified 3-fold
partition, nested small/medium/large training sets (M = 1/3 of L,
S = 1/20 of M, both stratified), a Jaro-Winkler-ordered adversarial test
subset, and balanced-accuracy / F1 / MCC reports.

Real labelled registries are not shipped; the synthetic generator stands
in for them, producing positive pairs by perturbing a base company name
(typos, deletions, abbreviations, acronyms, legal-suffix swaps) and
negative pairs from distinct base names, optionally including
hard negatives drawn from families of near-identical entities.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .metrics import jaro_winkler
from .textprep import CleanMode, clean


class PairFileError(ValueError):
    """Malformed pair CSV (bad header, label, or duplicate pair)."""


@dataclass
class LabeledDataset:
    """Pairs of raw names with binary match labels."""

    records: list  # of (name_a, name_b, label, source_tag)

    def __len__(self):
        return len(self.records)

    @property
    def pairs(self) -> list:
        return [(r[0], r[1]) for r in self.records]

    @property
    def labels(self) -> np.ndarray:
        return np.asarray([r[2] for r in self.records], dtype=np.int64)

    @property
    def positive_ratio(self) -> float:
        if not self.records:
            return 0.0
        return float(self.labels.mean())

    def subset(self, indices) -> "LabeledDataset":
        return LabeledDataset([self.records[i] for i in indices])

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["name_a", "name_b", "label"])
            for a, b, y, _ in self.records:
                writer.writerow([a, b, y])


def load_pairs(path, source_tag: str = "file") -> LabeledDataset:
    """Read a pair CSV (header name_a,name_b,label), validating every row.

    Duplicate unordered pairs and non-binary labels are rejected with the
    offending line numbers.
    """
    records = []
    seen = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PairFileError(f"{path}: empty file") from None
        if [h.strip() for h in header[:3]] != ["name_a", "name_b", "label"]:
            raise PairFileError(f"{path}: expected header name_a,name_b,label, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 3:
                raise PairFileError(f"{path}: line {lineno}: expected 3 columns, got {len(row)}")
            a, b, label = row[0], row[1], row[2].strip()
            if label not in ("0", "1"):
                raise PairFileError(f"{path}: line {lineno}: label must be 0 or 1, got {label!r}")
            key = (a, b) if a <= b else (b, a)
            if key in seen:
                raise PairFileError(
                    f"{path}: duplicate unordered pair at lines {seen[key]} and {lineno}"
                )
            seen[key] = lineno
            records.append((a, b, int(label), source_tag))
    return LabeledDataset(records)


# ---------------------------------------------------------------------------
# Splits

@dataclass
class FoldSplit:
    """One cross-validation fold with nested training sets."""

    test: LabeledDataset
    train_large: LabeledDataset
    train_medium: LabeledDataset
    train_small: LabeledDataset


@dataclass
class SplitPlan:
    k: int
    seed: int
    fold_assignments: np.ndarray  # fold index per record
    folds: list  # of FoldSplit


def _stratified_sample(indices_by_class: dict, fraction: float, rng) -> list:
    chosen = []
    for cls in sorted(indices_by_class):
        idx = indices_by_class[cls]
        n_take = int(round(len(idx) * fraction))
        n_take = max(1, n_take) if idx else 0
        perm = rng.permutation(len(idx))[:n_take]
        chosen.extend(idx[i] for i in perm)
    return sorted(chosen)


def stratified_folds(ds: LabeledDataset, k: int = 3, seed: int = 0,
                     medium_fraction: float = 1.0 / 3.0,
                     small_fraction: float = 1.0 / 20.0) -> SplitPlan:
    """Stratified k-fold partition with nested S ⊂ M ⊂ L training sets."""
    labels = ds.labels
    for cls in (0, 1):
        if (labels == cls).sum() < k:
            raise ValueError(f"class {cls} has fewer than k={k} members")

    rng = np.random.default_rng(seed)
    assignments = np.empty(len(ds), dtype=np.int64)
    for cls in (0, 1):
        idx = np.nonzero(labels == cls)[0]
        perm = rng.permutation(idx)
        for pos, record_idx in enumerate(perm):
            assignments[record_idx] = pos % k

    folds = []
    for fold in range(k):
        test_idx = np.nonzero(assignments == fold)[0]
        train_idx = np.nonzero(assignments != fold)[0]
        train_labels = labels[train_idx]
        by_class = {
            cls: [int(i) for i in train_idx[train_labels == cls]] for cls in (0, 1)
        }
        medium_idx = _stratified_sample(by_class, medium_fraction, rng)
        medium_labels = labels[medium_idx]
        by_class_m = {
            cls: [medium_idx[j] for j in np.nonzero(medium_labels == cls)[0]]
            for cls in (0, 1)
        }
        small_idx = _stratified_sample(by_class_m, small_fraction, rng)
        folds.append(
            FoldSplit(
                test=ds.subset(test_idx),
                train_large=ds.subset(train_idx),
                train_medium=ds.subset(medium_idx),
                train_small=ds.subset(small_idx),
            )
        )
    return SplitPlan(k=k, seed=seed, fold_assignments=assignments, folds=folds)


def build_jo_testset(test: LabeledDataset, per_class: int = 100) -> LabeledDataset:
    """Adversarial subset: most-JW-similar negatives, least-JW-similar positives."""
    labels = test.labels
    scores = np.asarray(
        [
            jaro_winkler(clean(a, CleanMode.CLASSIC), clean(b, CleanMode.CLASSIC))
            for a, b, _, _ in test.records
        ]
    )
    neg_idx = np.nonzero(labels == 0)[0]
    pos_idx = np.nonzero(labels == 1)[0]
    if len(neg_idx) < per_class or len(pos_idx) < per_class:
        warnings.warn(
            f"test set has fewer than {per_class} samples in some class; taking what exists"
        )
    # stable sorts keep the original order among ties
    neg_sorted = neg_idx[np.argsort(-scores[neg_idx], kind="stable")][:per_class]
    pos_sorted = pos_idx[np.argsort(scores[pos_idx], kind="stable")][:per_class]
    chosen = sorted(int(i) for i in np.concatenate([neg_sorted, pos_sorted]))
    return test.subset(chosen)


# ---------------------------------------------------------------------------
# Synthetic generator

_WORDS = [
    "ALPHA", "AURORA", "BANCA", "BLUE", "BRAVO", "CENTRO", "COSTRUZIONI",
    "CREDITO", "DELTA", "DIGITAL", "EDIL", "ENERGIA", "ENERGY", "FARM",
    "FERRO", "FIN", "FUTURA", "GAMMA", "GLOBAL", "GREEN", "GRUPPO", "HOLDING",
    "IDRO", "IMMOBILIARE", "IMPIANTI", "INDUSTRIA", "ITAL", "LOGISTICA",
    "LUCE", "MARE", "MECCANICA", "MEDIA", "METAL", "MILANO", "MONTE", "NORD",
    "NOVA", "OMEGA", "PAN", "PETROL", "PONTE", "PRIMA", "QUADRA", "RENOVARE",
    "RETE", "RIVA", "ROMA", "ROSSO", "SERVIZI", "SIGMA", "SOLARE", "STELLA",
    "STUDIO", "SUD", "TECNO", "TERRA", "TORINO", "TRASPORTI", "UNIONE",
    "VERDE", "VILLA", "VISTA", "ZENIT",
]

_SUFFIXES = ["SPA", "SRL", "SNC", "SAS", "LTD", "LLC", "INC", "CORP", "GMBH", "CO"]

_SUFFIX_VARIANTS = {
    "SPA": ["S.P.A.", "S P A", "SPA"],
    "SRL": ["S.R.L.", "S R L", "SRL"],
    "SNC": ["S.N.C.", "SNC"],
    "SAS": ["S.A.S.", "SAS"],
    "LTD": ["LTD.", "LIMITED", "LTD"],
    "LLC": ["L.L.C.", "LLC"],
    "INC": ["INC.", "INCORPORATED", "INC"],
    "CORP": ["CORP.", "CORPORATION", "CORP"],
    "GMBH": ["GMBH"],
    "CO": ["CO.", "COMPANY", "CO"],
}

_STREETS = ["VIA ROMA", "VIA MILANO", "CORSO ITALIA", "PIAZZA DANTE", "VIALE EUROPA"]

_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass
class SynthConfig:
    """Knobs for the synthetic pair generator."""

    corpus: list = None  # base company names; generated when None
    corpus_size: int = 600
    typo_rate: float = 0.5
    deletion_rate: float = 0.3
    abbreviation_rate: float = 0.2
    acronym_rate: float = 0.12
    suffix_swap_rate: float = 0.4
    positive_fraction: float = 0.5
    hard_negative_fraction: float = 0.35
    family_fraction: float = 0.35  # corpus entries that get a near-twin sibling
    noisy: bool = False  # domain-shift profile: addresses + heavier typos
    seed: int = 0

    def __post_init__(self):
        for name in ("typo_rate", "deletion_rate", "abbreviation_rate",
                     "acronym_rate", "suffix_swap_rate", "hard_negative_fraction",
                     "family_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if not 0.0 < self.positive_fraction < 1.0:
            raise ValueError("positive_fraction must be in (0, 1)")


@dataclass
class SynthCorpus:
    entities: list  # base names
    families: list  # of (index, sibling_index) near-identical distinct entities


def make_corpus(config: SynthConfig, rng) -> SynthCorpus:
    """Generate unique base company names plus hard-negative sibling families.

    A sibling differs from its base by a single code token or character,
    so the pair is highly string-similar yet denotes a different entity.
    """
    entities = []
    seen = set()
    families = []
    target = config.corpus_size
    while len(entities) < target:
        n_words = int(rng.integers(2, 4))
        words = [str(w) for w in rng.choice(_WORDS, size=n_words, replace=False)]
        if rng.random() < 0.5:
            words.append(str(rng.integers(1, 99)))
        suffix = str(rng.choice(_SUFFIXES))
        name = " ".join(words + [suffix])
        if name in seen:
            continue
        seen.add(name)
        entities.append(name)
        if rng.random() < config.family_fraction and len(entities) < target:
            sibling = _make_sibling(words, suffix, rng, seen)
            if sibling is not None:
                seen.add(sibling)
                entities.append(sibling)
                families.append((len(entities) - 2, len(entities) - 1))
    return SynthCorpus(entities=entities, families=families)


def _make_sibling(words, suffix, rng, seen):
    for _ in range(8):
        new_words = list(words)
        if new_words[-1].isdigit():
            # different division/branch code: same company family, other entity
            new_words[-1] = str(rng.integers(1, 99))
        else:
            k = int(rng.integers(0, len(new_words)))
            word = new_words[k]
            pos = int(rng.integers(0, len(word)))
            repl = str(rng.choice(list(_LETTERS)))
            new_words[k] = word[:pos] + repl + word[pos + 1:]
        candidate = " ".join(new_words + [suffix])
        if candidate not in seen:
            return candidate
    return None


def _split_suffix(name: str):
    words = name.split()
    if words and words[-1] in _SUFFIXES:
        return words[:-1], words[-1]
    return words, None


def _apply_typo(name: str, rng) -> str:
    if len(name) < 2:
        return name
    pos = int(rng.integers(0, len(name)))
    if name[pos].isdigit():  # digits are identity codes; never corrupt them
        pos = (pos + 1) % len(name)
        if name[pos].isdigit():
            return name
    return name[:pos] + str(rng.choice(list(_LETTERS))) + name[pos + 1:]


def _apply_deletion(name: str, rng) -> str:
    if len(name) < 3:
        return name
    pos = int(rng.integers(0, len(name)))
    if name[pos].isdigit():
        return name
    return name[:pos] + name[pos + 1:]


def perturb(name: str, config: SynthConfig, rng) -> str:
    """Same-entity variant of a base name, per the configured rates."""
    words, suffix = _split_suffix(name)

    if suffix is not None and rng.random() < config.suffix_swap_rate:
        suffix = str(rng.choice(_SUFFIX_VARIANTS[suffix]))

    alpha_words = [w for w in words if not w.isdigit()]
    if len(alpha_words) >= 2 and rng.random() < config.acronym_rate:
        initials = "".join(w[0] for w in alpha_words)
        tail = [w for w in words if w.isdigit()]
        out = " ".join([initials] + tail + ([suffix] if suffix else []))
    else:
        if words and rng.random() < config.abbreviation_rate:
            k = int(rng.integers(0, len(words)))
            if not words[k].isdigit() and len(words[k]) > 4:
                words = list(words)
                words[k] = words[k][:3] + "."
        out = " ".join(words + ([suffix] if suffix else []))
        if rng.random() < config.typo_rate:
            out = _apply_typo(out, rng)
        if rng.random() < config.deletion_rate:
            out = _apply_deletion(out, rng)

    if config.noisy:
        out = _apply_typo(out, rng)
        if rng.random() < 0.6:
            street = str(rng.choice(_STREETS))
            out = f"{out} {street} {int(rng.integers(1, 200))}"
    return out


def synth_generate(config: SynthConfig, n: int) -> LabeledDataset:
    """Generate a labelled synthetic dataset of n unique pairs."""
    rng = np.random.default_rng(config.seed)
    if config.corpus is not None:
        corpus = SynthCorpus(entities=list(config.corpus), families=[])
    else:
        corpus = make_corpus(config, rng)
    if not corpus.entities:
        raise ValueError("corpus is empty")

    n_entities = len(corpus.entities)
    n_pos = int(round(n * config.positive_fraction))
    n_neg = n - n_pos
    feasible_neg = n_entities * (n_entities - 1) // 2
    if n_neg > feasible_neg:
        raise ValueError(f"cannot build {n_neg} unique negative pairs from {n_entities} entities")

    tag = "synth-noisy" if config.noisy else "synth"
    records = []
    seen = set()

    attempts = 0
    while sum(1 for r in records if r[2] == 1) < n_pos:
        attempts += 1
        if attempts > 50 * n_pos:
            raise ValueError("could not generate enough unique positive pairs")
        base = corpus.entities[int(rng.integers(0, n_entities))]
        variant = perturb(base, config, rng)
        key = (base, variant) if base <= variant else (variant, base)
        if key in seen:
            continue
        seen.add(key)
        records.append((base, variant, 1, tag))

    families = corpus.families
    attempts = 0
    n_neg_done = 0
    while n_neg_done < n_neg:
        attempts += 1
        if attempts > 200 * max(n_neg, 1):
            raise ValueError("could not generate enough unique negative pairs")
        if families and rng.random() < config.hard_negative_fraction:
            i, j = families[int(rng.integers(0, len(families)))]
        else:
            i = int(rng.integers(0, n_entities))
            j = int(rng.integers(0, n_entities))
            if i == j:
                continue
        a, b = corpus.entities[i], corpus.entities[j]
        if config.noisy:
            a = perturb(a, config, rng) if rng.random() < 0.5 else a
        key = (a, b) if a <= b else (b, a)
        if key in seen or a == b:
            continue
        seen.add(key)
        records.append((a, b, 0, tag))
        n_neg_done += 1

    perm = rng.permutation(len(records))
    return LabeledDataset([records[i] for i in perm])


# ---------------------------------------------------------------------------
# Metrics

@dataclass
class MetricsReport:
    tp: int
    tn: int
    fp: int
    fn: int
    balanced_accuracy: float
    f1: float
    mcc: float
    degenerate: bool = False  # single-class confusion; F1/MCC reported as 0

    def to_dict(self) -> dict:
        return {
            "tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn,
            "balanced_accuracy": self.balanced_accuracy,
            "f1": self.f1, "mcc": self.mcc, "degenerate": self.degenerate,
        }


def compute_metrics(predictions, labels, threshold: float = 0.5) -> MetricsReport:
    """Confusion counts plus BA, F1 and MCC at the given probability threshold."""
    yhat = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if yhat.size == 0 or yhat.size != y.size:
        raise ValueError("predictions and labels must be equal-length and non-empty")
    pred = (yhat >= threshold).astype(np.int64)

    tp = int(((pred == 1) & (y == 1)).sum())
    tn = int(((pred == 0) & (y == 0)).sum())
    fp = int(((pred == 1) & (y == 0)).sum())
    fn = int(((pred == 0) & (y == 1)).sum())

    degenerate = False
    pos, neg = tp + fn, tn + fp
    tpr = tp / pos if pos else 0.0
    tnr = tn / neg if neg else 0.0
    if pos == 0 or neg == 0:
        degenerate = True
        ba = tpr if pos else tnr
    else:
        ba = (tpr + tnr) / 2.0

    if tp + fp == 0 and pos == 0:
        f1 = 0.0
        degenerate = True
    elif 2 * tp + fp + fn == 0:
        f1 = 0.0
        degenerate = True
    else:
        f1 = 2 * tp / (2 * tp + fp + fn)

    denom = math.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    if denom == 0:
        mcc = 0.0
        degenerate = True
    else:
        mcc = (tp * tn - fp * fn) / denom

    return MetricsReport(tp, tn, fp, fn, float(ba), float(f1), float(mcc), degenerate)
