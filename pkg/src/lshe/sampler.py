"""(K, L)-LSH tables over minhash signatures and candidate pair reporting."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EstimationError
from .minhash import (
    SENTINEL,
    HashFamilySpec,
    classical_signatures,
    densified_signatures,
    fmix64,
    make_family,
)
from .records import LabeledPairs, ShingleCorpus

log = logging.getLogger(__name__)

DEFAULT_BUCKET_CAP = 2000
_KEY_PRIME = np.uint64(0x100000001B3)


def pair_codes(pairs: np.ndarray, M: int) -> np.ndarray:
    """Encode canonical (a < b) pairs as a * M + b."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    a = np.minimum(pairs[:, 0], pairs[:, 1])
    b = np.maximum(pairs[:, 0], pairs[:, 1])
    return a * M + b


def decode_pairs(codes: np.ndarray, M: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    return np.stack([codes // M, codes % M], axis=1)


def bucket_keys(signatures: np.ndarray, K: int, L: int) -> np.ndarray:
    """(L, M) order-sensitive 64-bit digests of each table's K-row slice."""
    M = signatures.shape[0]
    if signatures.shape[1] != K * L:
        raise ValueError(f"signature length {signatures.shape[1]} != K*L = {K * L}")
    vals = signatures.reshape(M, L, K)
    keys = np.full((L, M), K, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for j in range(K):
            keys = fmix64(keys * _KEY_PRIME + vals[:, :, j].T)
    return keys


@dataclass
class LshTables:
    """L hash tables; table i groups record ids by bucket key.

    Stored column-wise: ``order[i]`` lists inserted record ids sorted by key,
    ``starts[i]`` marks bucket boundaries within that order.
    """

    K: int
    L: int
    M: int
    keys: np.ndarray
    order: list[np.ndarray]
    starts: list[np.ndarray]
    seed: int = 0

    def buckets(self, i: int) -> dict[int, list[int]]:
        order, starts = self.order[i], self.starts[i]
        bounds = np.append(starts, len(order))
        return {
            int(self.keys[i, order[s]]): order[s:e].tolist()
            for s, e in zip(bounds[:-1], bounds[1:])
        }

    def bucket_sizes(self, i: int) -> np.ndarray:
        return np.diff(np.append(self.starts[i], len(self.order[i])))


def build_tables(signatures: np.ndarray, K: int, L: int, seed: int = 0) -> LshTables:
    """Insert every non-sentinel record into one bucket per table. No pair is compared."""
    signatures = np.asarray(signatures, dtype=np.uint64)
    if signatures.ndim != 2 or signatures.shape[1] != K * L:
        raise ValueError(f"signatures must have shape (M, {K * L}), got {signatures.shape}")
    M = signatures.shape[0]
    if M < 1:
        raise ValueError("need at least one record")
    keys = bucket_keys(signatures, K, L)
    live = np.flatnonzero(~(signatures == SENTINEL).all(axis=1))
    order, starts = [], []
    for i in range(L):
        k = keys[i, live]
        o = np.argsort(k, kind="stable")
        ks = k[o]
        new = np.ones(len(ks), dtype=bool)
        new[1:] = ks[1:] != ks[:-1]
        order.append(live[o])
        starts.append(np.flatnonzero(new))
    return LshTables(K, L, M, keys, order, starts, seed)


@dataclass
class SamplePairSet:
    pairs: np.ndarray
    M: int
    K: int = 0
    L: int = 0
    seed: int = 0
    elapsed: float = 0.0
    capped_buckets: int = 0
    _codes: np.ndarray | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return len(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def codes(self) -> np.ndarray:
        if self._codes is None:
            self._codes = pair_codes(self.pairs, self.M)
        return self._codes

    def contains(self, pairs: np.ndarray) -> np.ndarray:
        return np.isin(pair_codes(pairs, self.M), self.codes)

    def export(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id_a", "id_b"])
            w.writerows(self.pairs.tolist())


def _bucket_pair_codes(order: np.ndarray, starts: np.ndarray, M: int) -> np.ndarray:
    """All within-bucket pairs, by sweeping the offset d between members."""
    sizes = np.diff(np.append(starts, len(order)))
    big = sizes >= 2
    if not big.any():
        return np.empty(0, dtype=np.int64)
    size_at = np.repeat(sizes, sizes)
    pos = np.arange(len(order)) - np.repeat(starts, sizes)
    idx = np.flatnonzero(size_at - pos > 1)
    out = []
    d = 1
    while len(idx):
        a, b = order[idx], order[idx + d]
        out.append(np.minimum(a, b) * M + np.maximum(a, b))
        d += 1
        idx = idx[size_at[idx] - pos[idx] > d]
    return np.concatenate(out)


def sample_pairs(
    tables: LshTables,
    bucket_cap: int = DEFAULT_BUCKET_CAP,
    seed: int | None = None,
) -> SamplePairSet:
    """Union over tables of all unordered pairs sharing a bucket.

    A bucket larger than ``bucket_cap`` only pairs each member with a seeded
    random subset of ``bucket_cap`` members.
    """
    t0 = time.perf_counter()
    M = tables.M
    rng = np.random.default_rng(tables.seed if seed is None else seed)
    chunks = []
    capped = 0
    for i in range(tables.L):
        order, starts = tables.order[i], tables.starts[i]
        sizes = tables.bucket_sizes(i)
        over = np.flatnonzero(sizes > bucket_cap)
        if len(over):
            keep = np.ones(len(order), dtype=bool)
            for bkt in over:
                s, b = starts[bkt], sizes[bkt]
                members = order[s:s + b]
                keep[s:s + b] = False
                capped += 1
                log.warning("table %d: bucket of %d records capped to %d partners", i, b, bucket_cap)
                partners = rng.choice(members, size=bucket_cap, replace=False)
                a = np.repeat(members, bucket_cap)
                c = np.tile(partners, b)
                ne = a != c
                chunks.append(np.minimum(a[ne], c[ne]) * M + np.maximum(a[ne], c[ne]))
            # rebuild grouping without the capped buckets
            sub_order = order[keep]
            new = np.ones(len(sub_order), dtype=bool)
            ks = tables.keys[i, sub_order]
            new[1:] = ks[1:] != ks[:-1]
            order, starts = sub_order, np.flatnonzero(new)
        chunks.append(_bucket_pair_codes(order, starts, M))
    codes = np.unique(np.concatenate(chunks)) if chunks else np.empty(0, dtype=np.int64)
    return SamplePairSet(
        decode_pairs(codes, M), M, tables.K, tables.L, tables.seed,
        time.perf_counter() - t0, capped, codes,
    )


def compute_signatures(corpus: ShingleCorpus, K: int, L: int, seed: int,
                       backend: str = "densified") -> np.ndarray:
    if backend == "densified":
        return densified_signatures(corpus, seed, K, L)
    if backend == "classical":
        return classical_signatures(corpus, make_family(HashFamilySpec(seed, K * L)), K, L)
    raise ValueError(f"unknown minhash backend {backend!r}")


def lsh_sample(corpus: ShingleCorpus, K: int, L: int, seed: int = 0,
               backend: str = "densified", bucket_cap: int = DEFAULT_BUCKET_CAP) -> SamplePairSet:
    """Signatures, tables and pair reporting in one call."""
    t0 = time.perf_counter()
    sig = compute_signatures(corpus, K, L, seed, backend)
    S = sample_pairs(build_tables(sig, K, L, seed), bucket_cap)
    S.elapsed = time.perf_counter() - t0
    return S


def empirical_recall(S: SamplePairSet, truth: LabeledPairs | np.ndarray) -> float:
    """Fraction of known match pairs that the sampler reported."""
    matches = truth.matches() if isinstance(truth, LabeledPairs) else np.asarray(truth).reshape(-1, 2)
    if len(matches) == 0:
        raise EstimationError("p undefined: no match pairs in the labeled set")
    return float(S.contains(matches).mean())


def reduction_ratio(m: int, M: int) -> float:
    if M < 2:
        raise ValueError("reduction ratio needs M >= 2")
    return 1.0 - m / (M * (M - 1) / 2)
