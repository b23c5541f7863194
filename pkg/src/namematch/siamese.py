"""Siamese classifier: shared LSTM encoder, distance features, head.

Both names run through the same encoder (one parameter set, so weight
sharing is structural).  The two 16-dim encodings are compared via L1,
L2, L-infinity, cosine distance, and the element-wise absolute
difference; every component is symmetric in its arguments, which makes
the whole classifier exactly commutative: predict(a, b) == predict(b, a)
bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .classifiers import DegenerateTrainingError
from .tensor import (
    ArchConfig,
    NadamState,
    ParamStore,
    bce_loss,
    head_backward,
    head_forward,
    lstm_backward,
    lstm_forward,
    nadam_step,
)
from .textprep import DEFAULT_ALPHABET, Alphabet, CleanMode, clean, encode

CHECKPOINT_VERSION = "namematch-siamese-1"


@dataclass
class TrainConfig:
    batch_size: int = 64
    epochs: int = 50
    seed: int = 0
    learning_rate: float = 1e-4  # fixed Nadam rate; raise for desk-scale runs
    beta1: float = 0.8
    beta2: float = 0.9

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SiameseModel:
    params: ParamStore
    alphabet: Alphabet = field(default_factory=lambda: DEFAULT_ALPHABET)
    train_config: TrainConfig = field(default_factory=TrainConfig)
    version: str = CHECKPOINT_VERSION

    @classmethod
    def init(cls, arch: ArchConfig = None, seed: int = 0,
             alphabet: Alphabet = None, train_config: TrainConfig = None) -> "SiameseModel":
        arch = arch or ArchConfig()
        return cls(
            params=ParamStore.init(arch, seed=seed),
            alphabet=alphabet or DEFAULT_ALPHABET,
            train_config=train_config or TrainConfig(seed=seed),
        )

    # -- encoding -----------------------------------------------------------

    def encode_batch(self, names) -> np.ndarray:
        seq_len = self.params.arch.seq_len
        out = np.empty((len(names), seq_len), dtype=np.int64)
        for k, name in enumerate(names):
            cleaned = clean(name, CleanMode.NEURAL)
            out[k] = encode(cleaned, self.alphabet, max_len=seq_len).indices
        return out

    def embed(self, name: str) -> np.ndarray:
        """16-dim encoder output for a single raw name (inference mode)."""
        h, _ = lstm_forward(self.encode_batch([name]), self.params)
        return h[0]

    # -- prediction ---------------------------------------------------------

    def predict_batch(self, pairs) -> np.ndarray:
        """ŷ for a list of (name_a, name_b) pairs, inference mode."""
        names_a = [p[0] for p in pairs]
        names_b = [p[1] for p in pairs]
        ha, _ = lstm_forward(self.encode_batch(names_a), self.params)
        hb, _ = lstm_forward(self.encode_batch(names_b), self.params)
        feats, _ = distance_features_batch(ha, hb)
        yhat, _ = head_forward(feats, self.params, training=False)
        return yhat

    def predict(self, a: str, b: str) -> float:
        return float(self.predict_batch([(a, b)])[0])

    # -- persistence --------------------------------------------------------

    def save(self, path):
        meta = {
            "version": self.version,
            "arch": self.params.arch.to_dict(),
            "alphabet": self.alphabet.to_json_list(),
            "alphabet_version": self.alphabet.version,
            "train_config": self.train_config.to_dict(),
        }
        payload = {f"param__{n}": a for n, a in self.params.arrays.items()}
        payload["__meta__"] = np.frombuffer(
            json.dumps(meta).encode("utf-8"), dtype=np.uint8
        )
        with open(path, "wb") as fh:
            np.savez(fh, **payload)

    @classmethod
    def load(cls, path) -> "SiameseModel":
        with np.load(path) as data:
            meta = json.loads(bytes(data["__meta__"]).decode("utf-8"))
            if meta["version"] != CHECKPOINT_VERSION:
                raise ValueError(
                    f"checkpoint version {meta['version']!r} not supported "
                    f"(expected {CHECKPOINT_VERSION!r})"
                )
            arrays = {
                n[len("param__"):]: data[n].copy()
                for n in data.files
                if n.startswith("param__")
            }
        arch = ArchConfig.from_dict(meta["arch"])
        alphabet = Alphabet.from_json_list(meta["alphabet"], meta["alphabet_version"])
        return cls(
            params=ParamStore(arch, arrays),
            alphabet=alphabet,
            train_config=TrainConfig(**meta["train_config"]),
        )


# ---------------------------------------------------------------------------
# Distance features

def distance_features_batch(u: np.ndarray, v: np.ndarray):
    """(batch, H+4) feature matrix [L1, L2, Linf, cosine_dist, |u-v|] + cache."""
    d = u - v
    ad = np.abs(d)
    l1 = ad.sum(axis=1)
    l2 = np.sqrt((d * d).sum(axis=1))
    linf_idx = np.argmax(ad, axis=1)
    rows = np.arange(u.shape[0])
    linf = ad[rows, linf_idx]

    nu = np.sqrt((u * u).sum(axis=1))
    nv = np.sqrt((v * v).sum(axis=1))
    denom = nu * nv
    ok = denom > 0
    cos_sim = np.zeros(u.shape[0])
    np.divide((u * v).sum(axis=1), denom, out=cos_sim, where=ok)
    # zero-norm vectors are maximally dissimilar by convention
    cos_dist = np.where(ok, 1.0 - cos_sim, 1.0)

    feats = np.concatenate(
        [l1[:, None], l2[:, None], linf[:, None], cos_dist[:, None], ad], axis=1
    )
    cache = (u, v, d, l2, linf_idx, nu, nv, cos_sim, ok)
    return feats, cache


def distance_features(u: np.ndarray, v: np.ndarray) -> dict:
    """Single-pair convenience view of the 20-dim distance vector."""
    feats, _ = distance_features_batch(
        np.asarray(u, dtype=np.float64)[None, :], np.asarray(v, dtype=np.float64)[None, :]
    )
    row = feats[0]
    return {
        "l1": float(row[0]),
        "l2": float(row[1]),
        "linf": float(row[2]),
        "cosine_distance": float(row[3]),
        "abs_diff": row[4:].copy(),
    }


def distance_features_backward(dfeats: np.ndarray, cache):
    """Gradients of the feature matrix with respect to u and v."""
    u, v, d, l2, linf_idx, nu, nv, cos_sim, ok = cache
    B, H = u.shape
    sgn = np.sign(d)

    du = np.zeros_like(u)
    dv = np.zeros_like(v)

    # L1
    g = dfeats[:, 0][:, None] * sgn
    du += g
    dv -= g
    # L2 (zero where the norm vanishes)
    safe_l2 = np.where(l2 > 0, l2, 1.0)
    g = dfeats[:, 1][:, None] * np.where(l2[:, None] > 0, d / safe_l2[:, None], 0.0)
    du += g
    dv -= g
    # Linf: gradient flows through the argmax coordinate only
    rows = np.arange(B)
    g = dfeats[:, 2] * sgn[rows, linf_idx]
    du[rows, linf_idx] += g
    dv[rows, linf_idx] -= g
    # cosine distance: d(1 - u.v/(|u||v|)); zero gradient on zero-norm rows
    safe_nu = np.where(ok, nu, 1.0)
    safe_nv = np.where(ok, nv, 1.0)
    dcos = dfeats[:, 3][:, None]
    okc = ok[:, None]
    du += np.where(
        okc,
        -dcos * (v / (safe_nu * safe_nv)[:, None] - (cos_sim / (safe_nu ** 2))[:, None] * u),
        0.0,
    )
    dv += np.where(
        okc,
        -dcos * (u / (safe_nu * safe_nv)[:, None] - (cos_sim / (safe_nv ** 2))[:, None] * v),
        0.0,
    )
    # element-wise |u - v|
    g = dfeats[:, 4:] * sgn
    du += g
    dv -= g
    return du, dv


# ---------------------------------------------------------------------------
# Training

def forward_backward(model: SiameseModel, idx_a: np.ndarray, idx_b: np.ndarray,
                     labels: np.ndarray, dropout_rng=None, training: bool = True):
    """One full pass: loss and gradients for a batch of encoded pairs."""
    params = model.params
    ha, cache_a = lstm_forward(idx_a, params)
    hb, cache_b = lstm_forward(idx_b, params)
    feats, dist_cache = distance_features_batch(ha, hb)
    yhat, head_cache = head_forward(feats, params, training=training, dropout_rng=dropout_rng)
    loss, dz = bce_loss(yhat, labels)

    grads = params.zero_grads()
    dfeats = head_backward(dz, head_cache, params, grads)
    dha, dhb = distance_features_backward(dfeats, dist_cache)
    lstm_backward(dha, cache_a, params, grads)
    lstm_backward(dhb, cache_b, params, grads)
    return loss, grads, yhat


def train(pairs, labels, model: SiameseModel = None, config: TrainConfig = None,
          arch: ArchConfig = None, verbose: bool = False):
    """Minibatch BCE training with Nadam; returns (model, per-epoch loss history)."""
    labels = np.asarray(labels, dtype=np.float64)
    if labels.size == 0 or len(set(labels.tolist())) < 2:
        raise DegenerateTrainingError("siamese training needs both classes")
    config = config or TrainConfig()
    if model is None:
        model = SiameseModel.init(arch=arch, seed=config.seed, train_config=config)

    idx_a = model.encode_batch([p[0] for p in pairs])
    idx_b = model.encode_batch([p[1] for p in pairs])

    rng = np.random.default_rng(config.seed)
    opt = NadamState(lr=config.learning_rate, beta1=config.beta1, beta2=config.beta2)
    history = []
    n = labels.size
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            sel = order[start:start + config.batch_size]
            loss, grads, _ = forward_backward(
                model, idx_a[sel], idx_b[sel], labels[sel], dropout_rng=rng
            )
            nadam_step(model.params, grads, opt)
            losses.append(loss)
        history.append(float(np.mean(losses)))
        if verbose:
            print(f"epoch {epoch + 1}/{config.epochs} loss {history[-1]:.4f}")
    return model, history
