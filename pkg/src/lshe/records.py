"""Record ingestion, string normalization, k-gram shingling and Jaccard similarity."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

# FNV-1a 64-bit parameters.
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

_NON_ALNUM = re.compile(r"[^\w\s]|_")
_WHITESPACE = re.compile(r"\s+")

# Incremented by every call to `jaccard`; the sampler tests assert it stays put.
similarity_calls = 0


@dataclass(frozen=True)
class Record:
    id: int
    attributes: tuple[str, ...]


@dataclass
class Dataset:
    schema: list[str]
    records: list[Record]
    entity: np.ndarray | None = None

    def __post_init__(self):
        if not self.records:
            raise DataError("empty dataset")
        arity = len(self.schema)
        for i, r in enumerate(self.records):
            if r.id != i:
                raise DataError(f"record ids must be contiguous, got {r.id} at position {i}")
            if len(r.attributes) != arity:
                raise DataError(f"record {i} has {len(r.attributes)} attributes, schema has {arity}")

    @property
    def M(self) -> int:
        return len(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def strings(self) -> list[str]:
        return [record_string(r) for r in self.records]


@dataclass
class LabeledPairs:
    """Canonical (id_a < id_b) labeled pairs, stored as parallel arrays."""

    id_a: np.ndarray
    id_b: np.ndarray
    label: np.ndarray

    def __len__(self) -> int:
        return len(self.label)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[int, int, int]], M: int | None = None) -> "LabeledPairs":
        seen: dict[tuple[int, int], bool] = {}
        for a, b, lab in rows:
            a, b, lab = int(a), int(b), int(lab)
            if a == b:
                raise DataError(f"self pair ({a}, {b})")
            if lab not in (0, 1):
                raise DataError(f"label must be 0 or 1, got {lab}")
            if M is not None and not (0 <= a < M and 0 <= b < M):
                raise DataError(f"pair ({a}, {b}) out of range for dataset of size {M}")
            key = (a, b) if a < b else (b, a)
            if key in seen and seen[key] != bool(lab):
                raise DataError(f"conflicting labels for pair {key}")
            seen[key] = bool(lab)
        keys = sorted(seen)
        a = np.array([k[0] for k in keys], dtype=np.int64)
        b = np.array([k[1] for k in keys], dtype=np.int64)
        lab = np.array([seen[k] for k in keys], dtype=bool)
        return cls(a, b, lab)

    def matches(self) -> np.ndarray:
        """(n, 2) array of match pairs."""
        return np.stack([self.id_a[self.label], self.id_b[self.label]], axis=1)

    def non_matches(self) -> np.ndarray:
        keep = ~self.label
        return np.stack([self.id_a[keep], self.id_b[keep]], axis=1)


@dataclass(frozen=True)
class ShingleSet:
    """Sorted unique 64-bit token ids of the k-grams of one string."""

    tokens: np.ndarray
    k: int = 3

    def __len__(self) -> int:
        return len(self.tokens)

    def as_set(self) -> frozenset[int]:
        return frozenset(self.tokens.tolist())


@dataclass
class ShingleCorpus:
    """CSR layout of the shingle sets of a whole dataset.

    Tokens of record ``i`` are ``tokens[offsets[i]:offsets[i + 1]]``, sorted and unique.
    """

    tokens: np.ndarray
    offsets: np.ndarray
    k: int
    _sets: list | None = field(default=None, repr=False)

    @property
    def M(self) -> int:
        return len(self.offsets) - 1

    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def record_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.M, dtype=np.int64), self.sizes())

    def __getitem__(self, i: int) -> ShingleSet:
        return ShingleSet(self.tokens[self.offsets[i]:self.offsets[i + 1]], self.k)

    def python_sets(self) -> list[frozenset[int]]:
        if self._sets is None:
            self._sets = [
                frozenset(self.tokens[self.offsets[i]:self.offsets[i + 1]].tolist())
                for i in range(self.M)
            ]
        return self._sets


def _read_rows(path: str | Path, delimiter: str) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty dataset") from None
        rows = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"line {reader.line_num}: expected {len(header)} columns, got {len(row)}"
                )
            rows.append(row)
    return header, rows


def load_records(
    path: str | Path,
    schema: Sequence[str] | None = None,
    delimiter: str = ",",
    entity_column: str | None = None,
) -> Dataset:
    """Read a delimited file with a header row into a Dataset.

    ``schema`` selects the attribute columns (all columns when omitted, minus
    ``entity_column``). Row order defines record ids.
    """
    header, rows = _read_rows(path, delimiter)
    if not rows:
        raise DataError("empty dataset")
    if schema is None:
        schema = [c for c in header if c != entity_column]
    missing = [c for c in schema if c not in header]
    if missing:
        raise DataError(f"columns not in header: {missing}")
    cols = [header.index(c) for c in schema]
    records = [Record(i, tuple(row[c] for c in cols)) for i, row in enumerate(rows)]
    entity = None
    if entity_column is not None:
        if entity_column not in header:
            raise DataError(f"entity column {entity_column!r} not in header")
        e = header.index(entity_column)
        _, entity = np.unique([row[e] for row in rows], return_inverse=True)
        entity = entity.astype(np.int64)
    return Dataset(list(schema), records, entity)


def load_labeled_pairs(path: str | Path, M: int | None = None, delimiter: str = ",") -> LabeledPairs:
    """Read ``id_a,id_b,label`` rows; a non-numeric first row is treated as a header."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for n, row in enumerate(csv.reader(fh, delimiter=delimiter)):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"line {n + 1}: expected 3 columns, got {len(row)}")
            try:
                rows.append(tuple(int(x) for x in row))
            except ValueError:
                if n == 0:
                    continue
                raise DataError(f"line {n + 1}: non-integer field in {row}") from None
    return LabeledPairs.from_rows(rows, M)


def normalize(text: str) -> str:
    text = _NON_ALNUM.sub("", text.upper())
    return _WHITESPACE.sub(" ", text).strip()


def record_string(record: Record | Sequence[str]) -> str:
    """Uppercase, drop punctuation, collapse whitespace, join attributes with one space."""
    attrs = record.attributes if isinstance(record, Record) else record
    return " ".join(p for p in (normalize(a) for a in attrs) if p)


def token_hash(gram: str) -> int:
    """FNV-1a 64 over the UTF-32-LE bytes of a k-gram (scalar reference)."""
    h = FNV_OFFSET
    for byte in gram.encode("utf-32-le"):
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def _kgram_hashes(codes: np.ndarray, k: int) -> np.ndarray:
    """Vectorized FNV-1a of every length-k window of a code-point array."""
    n = len(codes) - k + 1
    if n <= 0:
        return np.empty(0, dtype=np.uint64)
    h = np.full(n, FNV_OFFSET, dtype=np.uint64)
    prime = np.uint64(FNV_PRIME)
    with np.errstate(over="ignore"):
        for j in range(k):
            c = codes[j:j + n]
            for shift in (0, 8, 16, 24):
                h ^= (c >> np.uint64(shift)) & np.uint64(0xFF)
                h *= prime
    return h


def shingle(s: str, k: int = 3) -> ShingleSet:
    if k < 1:
        raise ValueError("shingle length must be >= 1")
    codes = np.frombuffer(s.encode("utf-32-le"), dtype="<u4").astype(np.uint64)
    return ShingleSet(np.unique(_kgram_hashes(codes, k)), k)


def shingle_corpus(strings: Sequence[str], k: int = 3) -> ShingleCorpus:
    """Shingle many strings in one vectorized pass.

    Strings are concatenated with a separator code point that never occurs in
    normalized text; windows straddling a boundary are dropped.
    """
    if k < 1:
        raise ValueError("shingle length must be >= 1")
    lengths = np.fromiter((len(s) for s in strings), dtype=np.int64, count=len(strings))
    joined = "\x00".join(strings)
    codes = np.frombuffer(joined.encode("utf-32-le"), dtype="<u4").astype(np.uint64)
    h = _kgram_hashes(codes, k)
    starts = np.concatenate([[0], np.cumsum(lengths + 1)[:-1]])
    counts = np.maximum(lengths - k + 1, 0)
    rec = np.repeat(np.arange(len(strings), dtype=np.int64), counts)
    pos = np.arange(counts.sum(), dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    tok = h[starts[rec] + pos] if len(rec) else np.empty(0, dtype=np.uint64)
    order = np.lexsort((tok, rec))
    rec, tok = rec[order], tok[order]
    keep = np.ones(len(tok), dtype=bool)
    keep[1:] = (rec[1:] != rec[:-1]) | (tok[1:] != tok[:-1])
    rec, tok = rec[keep], tok[keep]
    offsets = np.zeros(len(strings) + 1, dtype=np.int64)
    np.add.at(offsets, rec + 1, 1)
    return ShingleCorpus(tok, np.cumsum(offsets), k)


def jaccard(a: ShingleSet | frozenset | set, b: ShingleSet | frozenset | set) -> float:
    global similarity_calls
    similarity_calls += 1
    sa = a.as_set() if isinstance(a, ShingleSet) else a
    sb = b.as_set() if isinstance(b, ShingleSet) else b
    union = len(sa | sb)
    if union == 0:
        return 1.0
    return len(sa & sb) / union
