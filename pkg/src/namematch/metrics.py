"""Classical string similarity scores and the 9-dim feature vector.

Five scores: Levenshtein distance, InDel ratio, Jaro-Winkler similarity,
Token Set Ratio, and Jaccard word-set similarity.  All similarities are
reported in [0, 1]; Levenshtein is the raw edit count.  Feature vectors
add character and word counts of both names.

Empty-string conventions: every similarity of two empty strings is 1
(identical); Jaro of exactly one empty string is 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .textprep import CleanMode, clean


class MetricKind(Enum):
    LEVENSHTEIN = "levenshtein"
    INDEL_RATIO = "indel_ratio"
    TOKEN_SET_RATIO = "token_set_ratio"
    JACCARD = "jaccard"
    JARO_WINKLER = "jaro_winkler"


@dataclass(frozen=True)
class JwParams:
    """Winkler prefix premium: weight p and maximum prefix length."""

    prefix_weight: float = 0.1
    max_prefix: int = 4

    def __post_init__(self):
        if self.prefix_weight < 0:
            raise ValueError("prefix_weight must be >= 0")
        if self.max_prefix * self.prefix_weight > 1:
            raise ValueError("max_prefix * prefix_weight must be <= 1")


DEFAULT_JW = JwParams()

# Fixed feature order: the five scores then char/word counts of each name.
FEATURE_NAMES = (
    "levenshtein",
    "indel_ratio",
    "jaro_winkler",
    "token_set_ratio",
    "jaccard",
    "len_chars_a",
    "len_chars_b",
    "len_words_a",
    "len_words_b",
)


def levenshtein(a: str, b: str) -> int:
    """Minimum number of insertions, deletions and substitutions."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        curr = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            curr[j] = min(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + cost)
        prev = curr
    return prev[-1]


def _indel_distance(a: str, b: str) -> int:
    """Edit distance with insert/delete only (substitution costs 2)."""
    # D_ID = |a| + |b| - 2 * LCS(a, b)
    if not a or not b:
        return len(a) + len(b)
    prev = [0] * (len(b) + 1)
    for ca in a:
        curr = [0] * (len(b) + 1)
        for j, cb in enumerate(b, start=1):
            if ca == cb:
                curr[j] = prev[j - 1] + 1
            else:
                curr[j] = curr[j - 1] if curr[j - 1] >= prev[j] else prev[j]
        prev = curr
    return len(a) + len(b) - 2 * prev[-1]


def indel_ratio(a: str, b: str) -> float:
    """Normalised InDel similarity: 1 - D_ID / (|a| + |b|)."""
    total = len(a) + len(b)
    if total == 0:
        return 1.0
    return 1.0 - _indel_distance(a, b) / total


def jaro(a: str, b: str) -> float:
    """Jaro similarity via the standard matching window and transposition count."""
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    if a == b:
        return 1.0
    window = max(len(a), len(b)) // 2 - 1
    if window < 0:
        window = 0
    matched_b = [False] * len(b)
    a_matches = []
    for i, ca in enumerate(a):
        lo = max(0, i - window)
        hi = min(len(b), i + window + 1)
        for j in range(lo, hi):
            if not matched_b[j] and b[j] == ca:
                matched_b[j] = True
                a_matches.append(ca)
                break
    c = len(a_matches)
    if c == 0:
        return 0.0
    b_matches = [b[j] for j in range(len(b)) if matched_b[j]]
    half_transpositions = sum(x != y for x, y in zip(a_matches, b_matches))
    t = half_transpositions / 2.0
    return (c / len(a) + c / len(b) + (c - t) / c) / 3.0


def jaro_winkler(a: str, b: str, params: JwParams = DEFAULT_JW) -> float:
    """Jaro similarity with the Winkler common-prefix premium."""
    sj = jaro(a, b)
    prefix = 0
    for ca, cb in zip(a, b):
        if ca != cb or prefix >= params.max_prefix:
            break
        prefix += 1
    return sj + prefix * params.prefix_weight * (1.0 - sj)


def jaccard(a: str, b: str) -> float:
    """Intersection-over-union of whitespace-delimited word sets."""
    wa, wb = set(a.split()), set(b.split())
    union = wa | wb
    if not union:
        return 1.0
    return len(wa & wb) / len(union)


def token_set_ratio(a: str, b: str) -> float:
    """Word-set variant of the InDel ratio.

    Builds the sorted intersection string and the two sorted
    intersection+difference strings, and takes the best pairwise InDel
    ratio among them.
    """
    wa, wb = set(a.split()), set(b.split())
    if not wa and not wb:
        return 1.0
    if not wa or not wb:
        return 0.0
    inter = wa & wb
    s_ab = " ".join(sorted(inter))
    c_a = " ".join(sorted(inter) + sorted(wa - wb)).strip()
    c_b = " ".join(sorted(inter) + sorted(wb - wa)).strip()
    s_ab = s_ab.strip()
    return max(
        indel_ratio(s_ab, c_a),
        indel_ratio(s_ab, c_b),
        indel_ratio(c_a, c_b),
    )


_METRIC_FUNCS = {
    MetricKind.LEVENSHTEIN: lambda a, b: float(levenshtein(a, b)),
    MetricKind.INDEL_RATIO: indel_ratio,
    MetricKind.JARO_WINKLER: jaro_winkler,
    MetricKind.TOKEN_SET_RATIO: token_set_ratio,
    MetricKind.JACCARD: jaccard,
}


def score(kind: MetricKind, a: str, b: str) -> float:
    """Single metric score on already-cleaned strings."""
    return _METRIC_FUNCS[kind](a, b)


def all_scores(a: str, b: str) -> dict:
    """All five scores on already-cleaned strings, keyed by metric name."""
    return {kind.value: score(kind, a, b) for kind in MetricKind}


def feature_vector(raw_a: str, raw_b: str) -> list:
    """The 9 random-forest features for a raw (uncleaned) name pair.

    Applies classic cleaning, then: the five scores in FEATURE_NAMES
    order followed by character and word counts of both names.
    """
    a = clean(raw_a, CleanMode.CLASSIC)
    b = clean(raw_b, CleanMode.CLASSIC)
    return [
        float(levenshtein(a, b)),
        indel_ratio(a, b),
        jaro_winkler(a, b),
        token_set_ratio(a, b),
        jaccard(a, b),
        float(len(a)),
        float(len(b)),
        float(len(a.split())),
        float(len(b.split())),
    ]
