"""Match / non-match oracles: ground truth, or a linear hinge-loss classifier on k-gram differences."""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DataError
from .records import LabeledPairs, Record, ShingleCorpus, ShingleSet, record_string, shingle, shingle_corpus

log = logging.getLogger(__name__)

DEFAULT_DIM = 1 << 18
MODEL_MAGIC = b"LSHEMDL1"


def canonical_pairs(pairs) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return np.sort(pairs, axis=1)


class Oracle:
    """Answers whether record pairs refer to the same entity.

    Every query goes through the optional budget, which counts distinct pairs.
    """

    def query(self, pairs, budget=None) -> np.ndarray:
        pairs = canonical_pairs(pairs)
        if budget is not None:
            budget.charge(pairs)
        if len(pairs) == 0:
            return np.zeros(0, dtype=bool)
        return self._label(pairs[:, 0], pairs[:, 1])

    def _label(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class EntityOracle(Oracle):
    def __init__(self, entity: np.ndarray):
        self.entity = np.asarray(entity)

    def _label(self, a, b):
        return self.entity[a] == self.entity[b]


class PairListOracle(Oracle):
    def __init__(self, truth: LabeledPairs):
        M = int(max(truth.id_b.max(initial=0), truth.id_a.max(initial=0))) + 1
        self._shift = np.int64(32)
        codes = (truth.id_a << self._shift) | truth.id_b
        order = np.argsort(codes)
        self.codes = codes[order]
        self.labels = truth.label[order]
        self.M = M

    def _label(self, a, b):
        codes = (a << self._shift) | b
        pos = np.searchsorted(self.codes, codes)
        pos = np.minimum(pos, len(self.codes) - 1)
        found = self.codes[pos] == codes if len(self.codes) else np.zeros(len(codes), dtype=bool)
        if not found.all():
            i = int(np.flatnonzero(~found)[0])
            raise DataError(f"uncovered pair ({a[i]}, {b[i]})")
        return self.labels[pos]


def ground_truth_oracle(truth: LabeledPairs | np.ndarray) -> Oracle:
    """Entity-id arrays give a complete oracle; pair lists fail on uncovered pairs."""
    if isinstance(truth, LabeledPairs):
        return PairListOracle(truth)
    return EntityOracle(truth)


@dataclass(frozen=True)
class PairFeatureVector:
    indices: np.ndarray
    dim: int


def _as_shingles(x, k: int) -> frozenset[int]:
    if isinstance(x, ShingleSet):
        return x.as_set()
    if isinstance(x, (set, frozenset)):
        return frozenset(x)
    if isinstance(x, Record):
        x = record_string(x)
    return shingle(x, k).as_set()


def pair_features(a, b, k: int = 3, dim: int = DEFAULT_DIM) -> PairFeatureVector:
    """Hashed binary indicator of the k-grams present in exactly one of the two records."""
    if dim < 2:
        raise ValueError("feature dimension must be >= 2")
    diff = _as_shingles(a, k) ^ _as_shingles(b, k)
    idx = np.unique(np.fromiter(diff, dtype=np.uint64, count=len(diff)) % np.uint64(dim))
    return PairFeatureVector(idx.astype(np.int64), dim)


def feature_matrix(sets: Sequence[frozenset[int]], pairs: np.ndarray, dim: int) -> sp.csr_matrix:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    indptr = [0]
    chunks = []
    d = np.uint64(dim)
    for a, b in pairs.tolist():
        diff = sets[a] ^ sets[b]
        idx = np.unique(np.fromiter(diff, dtype=np.uint64, count=len(diff)) % d)
        chunks.append(idx)
        indptr.append(indptr[-1] + len(idx))
    indices = np.concatenate(chunks).astype(np.int64) if chunks else np.zeros(0, dtype=np.int64)
    data = np.ones(len(indices), dtype=np.float64)
    return sp.csr_matrix((data, indices, np.array(indptr)), shape=(len(pairs), dim))


@dataclass
class TrainConfig:
    lambdas: tuple[float, ...] = (1e-5, 1e-4, 1e-3)
    epochs: tuple[int, ...] = (10, 30)
    eta0: float = 0.5
    batch_size: int = 32
    folds: int = 5
    test_fraction: float = 0.2
    seed: int = 0


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    k: int = 3
    dim: int = DEFAULT_DIM
    seed: int = 0
    meta: dict[str, Any] = field(default_factory=dict)

    def decision(self, X: sp.csr_matrix) -> np.ndarray:
        return X @ self.weights + self.bias

    def predict(self, X: sp.csr_matrix) -> np.ndarray:
        return self.decision(X) > 0

    def save(self, path: str | Path) -> None:
        header = {"k": self.k, "D_f": self.dim, "bias": self.bias, "seed": self.seed, "metrics": self.meta}
        blob = json.dumps(header, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(MODEL_MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(np.ascontiguousarray(self.weights, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        raw = Path(path).read_bytes()
        if raw[:8] != MODEL_MAGIC:
            raise DataError(f"{path}: not a model file")
        (n,) = struct.unpack_from("<I", raw, 8)
        header = json.loads(raw[12:12 + n])
        w = np.frombuffer(raw, dtype="<f8", offset=12 + n).astype(np.float64)
        if len(w) != header["D_f"]:
            raise DataError(f"{path}: expected {header['D_f']} weights, found {len(w)}")
        return cls(w, header["bias"], header["k"], header["D_f"], header["seed"], header.get("metrics", {}))


def _fit(X: sp.csr_matrix, y: np.ndarray, lam: float, epochs: int, eta0: float,
         batch: int, seed: int) -> tuple[np.ndarray, float]:
    """Mini-batch subgradient descent on lam/2 |w|^2 + mean hinge, decaying step size.

    The weights are held as scale * v so the L2 shrink costs O(1) per step
    instead of O(D_f); only the coordinates active in a batch are touched.
    """
    n, dim = X.shape
    rng = np.random.default_rng(seed)
    v = np.zeros(dim)
    scale = 1.0
    b = 0.0
    t = 0
    for _ in range(epochs):
        perm = rng.permutation(n)
        Xp, yp = X[perm], y[perm]
        indptr, indices = Xp.indptr, Xp.indices
        for s in range(0, n, batch):
            e = min(s + batch, n)
            lo, hi = indptr[s], indptr[e]
            idx = indices[lo:hi]
            row = np.repeat(np.arange(e - s), np.diff(indptr[s:e + 1]))
            margin = np.bincount(row, weights=v[idx], minlength=e - s) * scale + b
            yb = yp[s:e]
            viol = yb * margin < 1
            eta = eta0 / (1.0 + eta0 * lam * t)
            scale *= 1.0 - eta * lam
            if viol.any():
                hit = viol[row]
                np.add.at(v, idx[hit], (eta / (e - s)) * yb[row[hit]] / scale)
                b += eta * yb[viol].sum() / (e - s)
            if scale < 1e-9:
                v *= scale
                scale = 1.0
            t += 1
    return v * scale, b


def _metrics(pred: np.ndarray, truth: np.ndarray) -> dict[str, float]:
    tp = int((pred & truth).sum())
    fp = int((pred & ~truth).sum())
    fn = int((~pred & truth).sum())
    return {
        "accuracy": float((pred == truth).mean()) if len(truth) else float("nan"),
        "precision": tp / (tp + fp) if tp + fp else float("nan"),
        "recall": tp / (tp + fn) if tp + fn else float("nan"),
    }


def train_linear(corpus: ShingleCorpus, train: LabeledPairs, hyper: TrainConfig | None = None,
                 dim: int = DEFAULT_DIM) -> LinearModel:
    """Fit a linear large-margin classifier on labeled pairs.

    A held-out split is set aside; (lambda, epochs) are chosen by k-fold
    cross-validation accuracy on the remainder, and the final model is refit on it.
    """
    hyper = hyper or TrainConfig()
    labels = np.asarray(train.label, dtype=bool)
    if labels.all() or not labels.any():
        raise DataError("training set must contain both matches and non-matches")
    pairs = np.stack([train.id_a, train.id_b], axis=1)
    X = feature_matrix(corpus.python_sets(), pairs, dim)
    y = np.where(labels, 1.0, -1.0)

    rng = np.random.default_rng(hyper.seed)
    perm = rng.permutation(len(y))
    n_test = int(round(hyper.test_fraction * len(y)))
    test, fit_idx = perm[:n_test], perm[n_test:]
    folds = np.array_split(fit_idx, hyper.folds)

    best, best_acc = None, -1.0
    for lam in hyper.lambdas:
        for ep in hyper.epochs:
            accs = []
            for f in range(hyper.folds):
                val = folds[f]
                tr = np.concatenate([folds[g] for g in range(hyper.folds) if g != f])
                if len(val) == 0 or len(np.unique(y[tr])) < 2:
                    continue
                w, b = _fit(X[tr], y[tr], lam, ep, hyper.eta0, hyper.batch_size, hyper.seed)
                accs.append(((X[val] @ w + b > 0) == (y[val] > 0)).mean())
            acc = float(np.mean(accs)) if accs else 0.0
            if acc > best_acc:
                best, best_acc = (lam, ep), acc
    lam, ep = best
    w, b = _fit(X[fit_idx], y[fit_idx], lam, ep, hyper.eta0, hyper.batch_size, hyper.seed)
    meta = {"lambda": lam, "epochs": ep, "cv_accuracy": best_acc,
            "n_train": int(len(fit_idx)), "n_test": int(len(test)), "config": asdict(hyper)}
    if len(test):
        meta["test"] = _metrics(X[test] @ w + b > 0, y[test] > 0)
    log.info("trained linear oracle: %s", meta)
    return LinearModel(w, float(b), corpus.k, dim, hyper.seed, meta)


class ClassifierOracle(Oracle):
    def __init__(self, model: LinearModel, corpus: ShingleCorpus):
        if corpus.k != model.k:
            raise ValueError(f"model trained with k={model.k}, corpus uses k={corpus.k}")
        self.model = model
        self.sets = corpus.python_sets()

    def _label(self, a, b):
        X = feature_matrix(self.sets, np.stack([a, b], axis=1), self.model.dim)
        return self.model.predict(X)


def classifier_oracle(model: LinearModel, dataset=None, corpus: ShingleCorpus | None = None) -> ClassifierOracle:
    if corpus is None:
        corpus = shingle_corpus(dataset.strings(), model.k)
    return ClassifierOracle(model, corpus)


def training_pairs(M: int, truth: LabeledPairs | np.ndarray, n_pairs: int, seed: int = 0,
                   candidates: np.ndarray | None = None) -> LabeledPairs:
    """Balanced training pairs: half known matches, half non-matches.

    Non-matches are uniform over all pairs by default. When ``candidates``
    (for example an LSH sample) is given they are drawn from its non-matching
    pairs instead, which are the hard negatives a deployed oracle sees.
    """
    rng = np.random.default_rng(seed)
    if isinstance(truth, LabeledPairs):
        matches = truth.matches()
        is_match = set(map(tuple, matches.tolist()))
        same = lambda a, b: (min(a, b), max(a, b)) in is_match
    else:
        from .evaluation import entity_match_pairs
        matches = entity_match_pairs(truth)
        same = lambda a, b: truth[a] == truth[b]
    n_match = min(n_pairs // 2, len(matches))
    if n_match == 0:
        raise DataError("no match pairs available for training")
    chosen = matches[rng.choice(len(matches), n_match, replace=False)]
    rows = [(int(a), int(b), 1) for a, b in chosen]
    n_neg = n_pairs - n_match
    if candidates is not None:
        cand = canonical_pairs(candidates)
        cand = cand[[not same(int(a), int(b)) for a, b in cand.tolist()]]
        if len(cand) < n_neg:
            raise DataError(f"only {len(cand)} non-matching candidates, need {n_neg}")
        pick = cand[np.sort(rng.choice(len(cand), n_neg, replace=False))]
        rows += [(int(a), int(b), 0) for a, b in pick]
        return LabeledPairs.from_rows(rows, M)
    seen = set()
    while len(seen) < n_neg:
        a, b = rng.integers(M, size=2)
        if a == b or same(int(a), int(b)):
            continue
        key = (min(a, b), max(a, b))
        if key not in seen:
            seen.add(key)
            rows.append((int(key[0]), int(key[1]), 0))
    return LabeledPairs.from_rows(rows, M)
