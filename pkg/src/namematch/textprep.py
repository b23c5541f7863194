"""Deterministic normalization and character encoding of name strings.

Two cleaning modes exist: ``CLASSIC`` strips punctuation (for the
similarity metrics) while ``NEURAL`` keeps it (the network is left as
much signal as possible).  Encoded names are fixed-length integer
sequences over a frozen 63-symbol alphabet, pad symbol at index 0.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from enum import Enum

import numpy as np

# Frozen v1 alphabet: pad + 26 letters + 10 digits + space + 25 punctuation
# symbols.  The exact ordered list is part of every saved model file; any
# change requires a new version tag.
PAD_SYMBOL = "➗"  # heavy division sign, display only - the model sees index 0
_PUNCT_SYMBOLS = list(".,:;'\"&()-/\\+*!?@#%$_=<>[")
ALPHABET_V1 = (
    [PAD_SYMBOL]
    + list(string.ascii_uppercase)
    + list(string.digits)
    + [" "]
    + _PUNCT_SYMBOLS
)
assert len(ALPHABET_V1) == 63

MAX_LEN = 300

_WS_RE = re.compile(r"\s+")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


class CleanMode(Enum):
    CLASSIC = "classic"
    NEURAL = "neural"


@dataclass(frozen=True)
class Alphabet:
    """Ordered symbol table for character encoding.

    ``symbols[0]`` is the pad symbol; characters outside the table map
    to the space symbol (out-of-vocabulary policy).
    """

    symbols: tuple = tuple(ALPHABET_V1)
    version: str = "v1"

    def __post_init__(self):
        if len(self.symbols) != 63:
            raise ValueError(f"alphabet must have 63 symbols, got {len(self.symbols)}")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be unique")

    @property
    def pad_index(self) -> int:
        return 0

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index_of(self, char: str) -> int:
        try:
            return self._lookup[char]
        except KeyError:
            return self._lookup[" "]

    @property
    def _lookup(self) -> dict:
        lut = self.__dict__.get("_lut")
        if lut is None:
            lut = {c: i for i, c in enumerate(self.symbols)}
            object.__setattr__(self, "_lut", lut)
        return lut

    def to_json_list(self) -> list:
        return list(self.symbols)

    @classmethod
    def from_json_list(cls, symbols, version: str = "v1") -> "Alphabet":
        return cls(symbols=tuple(symbols), version=version)


DEFAULT_ALPHABET = Alphabet()


@dataclass(frozen=True)
class EncodedName:
    """A name as a fixed-length sequence of alphabet indices.

    Positions at or beyond ``true_length`` hold the pad index.
    """

    indices: np.ndarray
    true_length: int

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))


def clean(raw: str, mode: CleanMode) -> str:
    """Normalize a raw name.

    CLASSIC: uppercase, drop ASCII punctuation, collapse whitespace runs
    to single spaces, trim the ends.  NEURAL: uppercase only.
    """
    if mode is CleanMode.NEURAL:
        return raw.upper()
    text = raw.upper().translate(_PUNCT_TABLE)
    return _WS_RE.sub(" ", text).strip()


def encode(name: str, alphabet: Alphabet = DEFAULT_ALPHABET, max_len: int = MAX_LEN) -> EncodedName:
    """Encode a neural-cleaned name as pad-filled symbol indices.

    Inputs longer than ``max_len`` are truncated; the empty string
    encodes as all-pad with true_length 0.
    """
    truncated = name[:max_len]
    indices = np.full(max_len, alphabet.pad_index, dtype=np.int64)
    for i, ch in enumerate(truncated):
        indices[i] = alphabet.index_of(ch)
    return EncodedName(indices=indices, true_length=len(truncated))


def one_hot(encoded: EncodedName, alphabet: Alphabet = DEFAULT_ALPHABET) -> np.ndarray:
    """One-hot matrix view of an encoded name, shape (max_len, 63)."""
    n = encoded.indices.shape[0]
    mat = np.zeros((n, alphabet.size), dtype=np.float64)
    mat[np.arange(n), encoded.indices] = 1.0
    return mat
