"""Connected-component census of the observed match graph and the LSH estimator (LSHE)."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import EstimationError

log = logging.getLogger(__name__)


@dataclass
class ObservedGraph:
    M: int
    edges: np.ndarray  # (E, 2) int64, a < b

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(self.edges) and (self.edges[:, 0] == self.edges[:, 1]).any():
            raise ValueError("self-loop in observed graph")


@dataclass
class ComponentProfile:
    """Number of connected components ``counts[i]`` of each size ``i``."""

    counts: dict[int, int]
    M: int

    def __getitem__(self, size: int) -> int:
        return self.counts.get(size, 0)

    def at_least(self, size: int) -> int:
        return sum(c for s, c in self.counts.items() if s >= size)

    def total(self) -> int:
        return sum(self.counts.values())

    def check(self) -> None:
        assert all(c >= 0 for c in self.counts.values())
        assert sum(s * c for s, c in self.counts.items()) == self.M


def component_labels(M: int, edges: np.ndarray) -> np.ndarray:
    """Root label of every vertex, by vectorized union-find (hook to the smaller root, then compress)."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges) and (edges.min() < 0 or edges.max() >= M):
        raise ValueError(f"edge endpoint out of range [0, {M})")
    parent = np.arange(M, dtype=np.int64)
    u, v = edges[:, 0], edges[:, 1]
    while True:
        ru, rv = parent[u], parent[v]
        diff = ru != rv
        if not diff.any():
            return parent
        lo = np.minimum(ru[diff], rv[diff])
        hi = np.maximum(ru[diff], rv[diff])
        np.minimum.at(parent, hi, lo)
        while True:
            grand = parent[parent]
            if np.array_equal(grand, parent):
                break
            parent = grand
        u, v = u[diff], v[diff]


def component_profile(M: int, matched_edges: np.ndarray | ObservedGraph) -> ComponentProfile:
    if isinstance(matched_edges, ObservedGraph):
        M, matched_edges = matched_edges.M, matched_edges.edges
    labels = component_labels(M, matched_edges)
    sizes = np.bincount(labels, minlength=M)
    hist = np.bincount(sizes[sizes > 0])
    return ComponentProfile({int(s): int(c) for s, c in enumerate(hist) if c}, M)


def _check_p(p: float) -> None:
    if not (0.0 < p <= 1.0):
        raise EstimationError(f"recall p must lie in (0, 1], got {p}")


def solve_clique_counts(profile: ComponentProfile, p: float) -> tuple[float, float, float]:
    """Invert the expected-count equations for true cliques of size 1, 2 and 3."""
    _check_p(p)
    n1, n2, n3 = profile[1], profile[2], profile[3]
    s3 = n3 / (p * p * (3 - 2 * p))
    s2 = (n2 - s3 * 3 * (1 - p) ** 2 * p) / p
    s1 = n1 - s2 * 2 * (1 - p) - s3 * 3 * (1 - p) ** 2
    return s1, s2, s3


def lshe_coefficients(p: float) -> tuple[float, float]:
    """Weights of n'_2 and n'_3 in the estimator (n'_1 and n'_>=4 have weight 1)."""
    _check_p(p)
    return (2 * p - 1) / p, (1 - 6 * (1 - p) ** 2 * p) / (p * p * (3 - 2 * p))


def lshe(profile: ComponentProfile, p: float) -> float:
    c2, c3 = lshe_coefficients(p)
    return profile[1] + profile[2] * c2 + profile[3] * c3 + profile.at_least(4)


def variance_coefficients(p: float) -> tuple[float, float]:
    """(triangle, pair) coefficients of the LSHE variance at recall p."""
    _check_p(p)
    tri = (p - 1) ** 2 * (3 * p * p - p + 1) / (p * p * (3 - 2 * p))
    return tri, (1 - p) / p


def lshe_variance(n2_star: float, n3_star: float, p: float) -> float:
    tri, pair = variance_coefficients(p)
    if n2_star < 0 or n3_star < 0:
        log.warning("negative clique estimate (n2*=%g, n3*=%g) clamped to 0 for variance", n2_star, n3_star)
    return max(n3_star, 0.0) * tri + max(n2_star, 0.0) * pair


@dataclass
class EstimateReport:
    estimate: float
    std_error: float | None
    p: float
    m: int
    profile: ComponentProfile
    method: str
    n_star: tuple[float, float, float] | None = None
    seed: int | None = None
    elapsed_ms: float = 0.0
    degenerate: bool = False
    meta: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        d = {
            "estimate": self.estimate,
            "std_error": self.std_error,
            "p": self.p,
            "m": self.m,
            "n_prime": {
                "1": self.profile[1], "2": self.profile[2], "3": self.profile[3],
                "4plus": self.profile.at_least(4),
            },
            "n_star": None if self.n_star is None else dict(zip(("1", "2", "3"), self.n_star)),
            "method": self.method,
            "seed": self.seed,
            "elapsed_ms": self.elapsed_ms,
        }
        if self.degenerate:
            d["degenerate"] = True
        if self.meta:
            d["meta"] = self.meta
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def report_from_profile(profile: ComponentProfile, p: float, m: int, method: str, **kw) -> EstimateReport:
    """LSHE point estimate plus plug-in standard error for an observed profile."""
    est = lshe(profile, p)
    n_star = solve_clique_counts(profile, p)
    se = math.sqrt(lshe_variance(n_star[1], n_star[2], p))
    return EstimateReport(est, se, p, m, profile, method, n_star, **kw)


@dataclass
class SamplerConfig:
    K: int = 1
    L: int = 20
    shingle: int = 3
    seed: int = 0
    backend: str = "densified"
    bucket_cap: int = 2000


def estimate_unique_entities(dataset, config: SamplerConfig, labeled, oracle,
                             corpus=None, budget=None, export_pairs=None) -> EstimateReport:
    """Run the full pipeline: LSH sample, recall from labeled matches, label, census, estimate.

    ``dataset`` may be a Dataset or precomputed ShingleCorpus via ``corpus``.
    ``export_pairs`` names a file that receives the sampled pairs.
    """
    from .records import shingle_corpus
    from .sampler import empirical_recall, lsh_sample, reduction_ratio

    t0 = time.perf_counter()
    if corpus is None:
        corpus = shingle_corpus(dataset.strings(), config.shingle)
    S = lsh_sample(corpus, config.K, config.L, config.seed, config.backend, config.bucket_cap)
    if export_pairs is not None:
        S.export(export_pairs)
    p = empirical_recall(S, labeled)
    if p == 0:
        raise EstimationError("estimator undefined at p=0")
    labels = oracle.query(S.pairs, budget)
    profile = component_profile(corpus.M, S.pairs[labels])
    rep = report_from_profile(
        profile, p, S.m, "lshe", seed=config.seed,
        meta={"K": config.K, "L": config.L, "shingle": config.shingle,
              "reduction_ratio": reduction_ratio(S.m, corpus.M) if corpus.M > 1 else 1.0,
              "sample_seconds": S.elapsed},
    )
    rep.elapsed_ms = (time.perf_counter() - t0) * 1e3
    return rep
