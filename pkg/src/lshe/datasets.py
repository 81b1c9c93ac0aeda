"""Bundled Restaurant benchmark and seeded synthetic person-record generators."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .records import Dataset, LabeledPairs, Record, load_labeled_pairs, load_records

RESTAURANT_SCHEMA = ["name", "addr", "city", "type"]


def restaurant_paths():
    root = resources.files("lshe") / "data" / "restaurant"
    return root / "records.csv", root / "matches.csv"


def load_restaurant(schema=RESTAURANT_SCHEMA) -> tuple[Dataset, LabeledPairs]:
    """Fodor's/Zagat's restaurant guide records (864 records, 112 matching pairs)."""
    rec, matches = restaurant_paths()
    ds = load_records(rec, schema=schema, entity_column="entity")
    return ds, load_labeled_pairs(matches, ds.M)


_CONSONANTS = list("BCDFGHJKLMNPRSTVWZ") + ["CH", "SH", "TH", "BR", "KR", "ST", "GR"]
_VOWELS = ["A", "E", "I", "O", "U", "AI", "EE", "OU", "Y"]
_STREET_SUFFIX = ["ST", "AVE", "RD", "DR", "LN", "CT", "BLVD", "WAY", "PL"]


def _words(rng: np.random.Generator, n: int, lo: int, hi: int) -> list[str]:
    out = set()
    while len(out) < n:
        k = int(rng.integers(lo, hi + 1))
        out.add("".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(k)
        ))
    return sorted(out)


def _zipf_pick(rng, vocab: list[str], size: int, a: float = 1.1) -> list[str]:
    w = 1.0 / np.arange(1, len(vocab) + 1) ** a
    return [vocab[i] for i in rng.choice(len(vocab), size=size, p=w / w.sum())]


@dataclass
class Perturbation:
    """Per-attribute corruption rates applied to duplicate records."""

    typo: float = 0.40
    missing: float = 0.15
    initial: float = 0.10
    age_shift: float = 0.2
    swap_names: float = 0.03


def _typo(rng, s: str) -> str:
    if not s:
        return s
    i = int(rng.integers(len(s)))
    op = rng.integers(4)
    letter = chr(ord("A") + int(rng.integers(26)))
    if op == 0:
        return s[:i] + s[i + 1:]
    if op == 1:
        return s[:i] + letter + s[i + 1:]
    if op == 2:
        return s[:i] + letter + s[i:]
    if i + 1 < len(s):
        return s[:i] + s[i + 1] + s[i] + s[i + 2:]
    return s


def entity_sizes(M: int, size_probs: dict[int, float], rng: np.random.Generator) -> np.ndarray:
    """Draw entity sizes until exactly M records are covered."""
    sizes, probs = zip(*sorted(size_probs.items()))
    probs = np.array(probs) / sum(probs)
    mean = float(np.dot(sizes, probs))
    draw = rng.choice(sizes, size=int(M / mean * 1.2) + 10, p=probs)
    cum = np.cumsum(draw)
    n = int(np.searchsorted(cum, M))
    out = draw[:n + 1].copy()
    out[-1] -= cum[n] - M
    return out[out > 0]


VOTER_SIZES = {1: 0.86, 2: 0.10, 3: 0.03, 4: 0.008, 5: 0.002}
VOTER_SCHEMA = ["first", "last", "age", "address", "city", "zip"]


def synthetic_people(M: int, seed: int = 0, sizes: dict[int, float] = VOTER_SIZES,
                     perturbation: Perturbation | None = None, n_cities: int = 2000,
                     city_skew: float = 0.6, name_skew: float = 0.9) -> Dataset:
    """Person records with planted duplicate groups; ``Dataset.entity`` holds the truth.

    Record order is shuffled so duplicates are not adjacent.
    """
    pert = perturbation or Perturbation()
    rng = np.random.default_rng(seed)
    group_sizes = entity_sizes(M, sizes, rng)
    n = len(group_sizes)
    first = _zipf_pick(rng, _words(rng, 3000, 2, 3), n, a=name_skew)
    last = _zipf_pick(rng, _words(rng, 40000, 2, 4), n, a=0.6)
    streets = _words(rng, 5000, 2, 3)
    cities = _words(rng, n_cities, 2, 4)
    zips = rng.integers(10000, 99999, size=len(cities))
    w = 1.0 / np.arange(1, len(cities) + 1) ** city_skew
    city_idx = rng.choice(len(cities), size=n, p=w / w.sum())
    ages = rng.integers(18, 95, size=n)
    numbers = rng.integers(1, 9999, size=n)
    street = rng.integers(len(streets), size=n)
    suffix = rng.integers(len(_STREET_SUFFIX), size=n)

    rows, entity = [], []
    for e in range(n):
        c = city_idx[e]
        base = [first[e], last[e], str(ages[e]),
                f"{numbers[e]} {streets[street[e]]} {_STREET_SUFFIX[suffix[e]]}",
                cities[c], str(zips[c])]
        for copy in range(group_sizes[e]):
            attrs = list(base)
            if copy:
                attrs = _perturb(rng, attrs, pert)
            rows.append(attrs)
            entity.append(e)
    perm = rng.permutation(len(rows))
    records = [Record(i, tuple(rows[j])) for i, j in enumerate(perm)]
    return Dataset(list(VOTER_SCHEMA), records, np.asarray(entity, dtype=np.int64)[perm])


def _perturb(rng, attrs: list[str], pert: Perturbation) -> list[str]:
    u = rng.random((len(attrs), 3))
    if rng.random() < pert.swap_names:
        attrs[0], attrs[1] = attrs[1], attrs[0]
    for i in range(len(attrs)):
        if i == 2:
            if u[i, 0] < pert.age_shift:
                attrs[i] = str(int(attrs[i]) + int(rng.choice([-1, 1])))
            continue
        if u[i, 1] < pert.missing:
            attrs[i] = ""
            continue
        if i == 0 and u[i, 2] < pert.initial:
            attrs[i] = attrs[i][:1]
            continue
        if u[i, 0] < pert.typo:
            attrs[i] = _typo(rng, attrs[i])
            if rng.random() < 0.3:
                attrs[i] = _typo(rng, attrs[i])
    return attrs
