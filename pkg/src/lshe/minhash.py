"""Minwise hash signatures: classical K*L independent functions and densified one-permutation hashing."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .records import ShingleCorpus, ShingleSet

_MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
SENTINEL = np.uint64(_MASK64)

_C1 = np.uint64(0xFF51AFD7ED558CCD)
_C2 = np.uint64(0xC4CEB9FE1A85EC53)
_S33 = np.uint64(33)
_S32 = np.uint64(32)

CACHE_MAGIC = b"LSHESIG\x00"
CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<8sIQIIQ")


class EmptySetError(ValueError):
    pass


def fmix64(x: np.ndarray) -> np.ndarray:
    """Murmur3 finalizer; a bijection on 64-bit words."""
    return _fmix64_inplace(np.asarray(x, dtype=np.uint64).copy())


def _fmix64_inplace(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x ^= x >> _S33
        x *= _C1
        x ^= x >> _S33
        x *= _C2
        x ^= x >> _S33
    return x


def splitmix64(state: int) -> int:
    z = (state + GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def range_reduce(h: np.ndarray, n: int) -> np.ndarray:
    """Map 64-bit hashes to [0, n) using their high 32 bits."""
    return ((h >> _S32) * np.uint64(n)) >> _S32


@dataclass(frozen=True)
class HashFamilySpec:
    seed: int
    count: int


class HashFamily:
    """``count`` seeded mixers h_f(t) = fmix64(a_f * t + b_f) with odd a_f.

    Function f depends only on (seed, f), so a longer family extends a shorter one.
    ``evaluations`` counts token hashes computed through `apply`.
    """

    def __init__(self, spec: HashFamilySpec):
        if spec.count < 1:
            raise ValueError("hash family needs count >= 1")
        self.spec = spec
        base = splitmix64(spec.seed & _MASK64)
        a = [splitmix64(base ^ (2 * f)) | 1 for f in range(spec.count)]
        b = [splitmix64(base ^ (2 * f + 1)) for f in range(spec.count)]
        self.a = np.array(a, dtype=np.uint64)
        self.b = np.array(b, dtype=np.uint64)
        self.evaluations = 0

    def __len__(self) -> int:
        return self.spec.count

    def apply(self, f: int, tokens: np.ndarray) -> np.ndarray:
        self.evaluations += len(tokens)
        with np.errstate(over="ignore"):
            return fmix64(tokens * self.a[f] + self.b[f])


def make_family(spec: HashFamilySpec) -> HashFamily:
    return HashFamily(spec)


@dataclass
class MinHashSignature:
    """K*L minhash values; slot (table i, row j) lives at index i*K + j."""

    values: np.ndarray
    K: int
    L: int

    def __post_init__(self):
        if len(self.values) != self.K * self.L:
            raise ValueError(f"signature length {len(self.values)} != K*L = {self.K * self.L}")

    def table(self, i: int) -> np.ndarray:
        return self.values[i * self.K:(i + 1) * self.K]


def signature_classical(s: ShingleSet, family: HashFamily, K: int, L: int) -> MinHashSignature:
    if len(s) == 0:
        raise EmptySetError("empty set has no minhash")
    if len(family) < K * L:
        raise ValueError(f"family has {len(family)} functions, need K*L = {K * L}")
    vals = np.array([family.apply(f, s.tokens).min() for f in range(K * L)], dtype=np.uint64)
    return MinHashSignature(vals, K, L)


def classical_signatures(corpus: ShingleCorpus, family: HashFamily, K: int, L: int) -> np.ndarray:
    """(M, K*L) matrix of classical minhashes; empty records get a SENTINEL row."""
    n = K * L
    if len(family) < n:
        raise ValueError(f"family has {len(family)} functions, need K*L = {n}")
    out = np.full((corpus.M, n), SENTINEL, dtype=np.uint64)
    nonempty = np.flatnonzero(corpus.sizes() > 0)
    if len(nonempty) == 0:
        return out
    starts = corpus.offsets[nonempty]
    for f in range(n):
        h = family.apply(f, corpus.tokens)
        out[nonempty, f] = np.minimum.reduceat(h, starts)
    return out


def densified_signatures(
    corpus: ShingleCorpus,
    seed: int,
    K: int,
    L: int,
    family: HashFamily | None = None,
) -> np.ndarray:
    """One-pass densified one-permutation minhashes for every record.

    Each token is hashed exactly once, routed to one of K*L bins by its high
    bits, and each bin keeps its minimum. An empty bin probes bins chosen by a
    hash of (bin, attempt) until it hits an occupied one, and stores that
    bin's minimum mixed with the attempt number. Empty records get SENTINEL rows.
    """
    n_bins = K * L
    if family is None:
        family = make_family(HashFamilySpec(seed, 1))
    M = corpus.M
    out = np.full(M * n_bins, SENTINEL, dtype=np.uint64)
    occupied = np.zeros(M * n_bins, dtype=bool)
    h = family.apply(0, corpus.tokens)
    if len(h):
        slot = corpus.record_ids() * n_bins + range_reduce(h, n_bins).astype(np.int64)
        np.minimum.at(out, slot, h)
        occupied[slot] = True
    out = out.reshape(M, n_bins)
    occupied = occupied.reshape(M, n_bins)

    empty = np.flatnonzero((~occupied & (corpus.sizes() > 0)[:, None]).ravel())
    out, occupied = out.ravel(), occupied.ravel()
    base = empty - empty % n_bins
    bins = (empty % n_bins).astype(np.uint64)
    probe_key = np.uint64(splitmix64((seed ^ 0x5DEECE66D) & _MASK64))
    attempt = 1
    while len(bins):
        x = (bins << _S32) | np.uint64(attempt)
        x ^= probe_key
        target = base + range_reduce(_fmix64_inplace(x), n_bins).astype(np.int64)
        hit = occupied[target]
        if hit.any():
            borrowed = out[target[hit]] ^ np.uint64((attempt * GOLDEN) & _MASK64)
            out[base[hit] + bins[hit].astype(np.int64)] = _fmix64_inplace(borrowed)
        miss = ~hit
        base, bins = base[miss], bins[miss]
        attempt += 1
    return out.reshape(M, n_bins)


def signature_oph_densified(s: ShingleSet, seed: int, K: int, L: int,
                            family: HashFamily | None = None) -> MinHashSignature:
    if len(s) == 0:
        raise EmptySetError("empty set has no minhash")
    corpus = ShingleCorpus(s.tokens, np.array([0, len(s.tokens)]), s.k)
    return MinHashSignature(densified_signatures(corpus, seed, K, L, family)[0], K, L)


def retrieval_probability(J, K: int, L: int):
    """Probability that (K, L)-LSH reports a pair with Jaccard similarity J."""
    J = np.asarray(J, dtype=float)
    if np.any((J < 0) | (J > 1)) or K < 1 or L < 1:
        raise ValueError("need 0 <= J <= 1, K >= 1, L >= 1")
    out = 1.0 - (1.0 - J**K) ** L
    return float(out) if out.ndim == 0 else out


def write_signature_cache(path: str | Path, signatures: np.ndarray, K: int, L: int, seed: int) -> None:
    M = signatures.shape[0]
    if signatures.shape != (M, K * L):
        raise ValueError("signature matrix shape does not match K*L")
    with open(path, "wb") as fh:
        fh.write(_CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, M, K, L, seed & _MASK64))
        fh.write(np.ascontiguousarray(signatures, dtype="<u8").tobytes())


def read_signature_cache(path: str | Path) -> tuple[np.ndarray, int, int, int]:
    """Return (signatures, K, L, seed)."""
    raw = Path(path).read_bytes()
    magic, version, M, K, L, seed = _CACHE_HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC or version != CACHE_VERSION:
        raise ValueError(f"{path}: not a signature cache (magic={magic!r}, version={version})")
    body = np.frombuffer(raw, dtype="<u8", offset=_CACHE_HEADER.size)
    if len(body) != M * K * L:
        raise ValueError(f"{path}: expected {M * K * L} values, found {len(body)}")
    return body.astype(np.uint64).reshape(M, K * L), K, L, seed
