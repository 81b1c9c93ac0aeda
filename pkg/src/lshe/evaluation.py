"""Synthetic clique graphs, simulated edge sampling, relative error and parameter sweeps."""

from __future__ import annotations

import csv
import math
import io
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EstimationError
from .graph import ObservedGraph
from .records import LabeledPairs, ShingleCorpus
from .sampler import (
    build_tables,
    compute_signatures,
    empirical_recall,
    reduction_ratio,
    sample_pairs,
)


@dataclass
class SyntheticCliqueGraph:
    counts: dict[int, int]
    entity: np.ndarray  # clique id of every vertex
    edges: np.ndarray  # (E, 2), a < b
    seed: int = 0

    @property
    def M(self) -> int:
        return len(self.entity)

    @property
    def n(self) -> int:
        return sum(self.counts.values())


def clique_edges(entity: np.ndarray) -> np.ndarray:
    """All intra-group pairs (a < b) for a vertex -> group assignment."""
    order = np.argsort(entity, kind="stable")
    ent = entity[order]
    starts = np.flatnonzero(np.r_[True, ent[1:] != ent[:-1]])
    sizes = np.diff(np.r_[starts, len(ent)])
    size_at = np.repeat(sizes, sizes)
    pos = np.arange(len(ent)) - np.repeat(starts, sizes)
    idx = np.flatnonzero(size_at - pos > 1)
    out = []
    d = 1
    while len(idx):
        a, b = order[idx], order[idx + d]
        out.append(np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1))
        d += 1
        idx = idx[size_at[idx] - pos[idx] > d]
    if not out:
        return np.empty((0, 2), dtype=np.int64)
    e = np.concatenate(out)
    return e[np.lexsort((e[:, 1], e[:, 0]))]


entity_match_pairs = clique_edges


def synth_graph(counts: dict[int, int], seed: int = 0) -> SyntheticCliqueGraph:
    """Vertices randomly partitioned into ``counts[i]`` cliques of size i."""
    counts = {int(s): int(c) for s, c in counts.items()}
    if any(c < 0 for c in counts.values()) or any(s < 1 for s in counts):
        raise ValueError("clique sizes must be >= 1 and counts >= 0")
    if not any(counts.values()):
        raise ValueError("all clique counts are zero")
    sizes = np.concatenate([np.full(c, s, dtype=np.int64) for s, c in sorted(counts.items())])
    labels = np.repeat(np.arange(len(sizes)), sizes)
    rng = np.random.default_rng(seed)
    entity = labels[rng.permutation(len(labels))]
    return SyntheticCliqueGraph({s: c for s, c in counts.items() if c}, entity, clique_edges(entity), seed)


def simulate_edge_sampling(g: SyntheticCliqueGraph, p: float, seed=0) -> ObservedGraph:
    """Keep every true edge independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    keep = rng.random(len(g.edges)) < p
    return ObservedGraph(g.M, g.edges[keep])


def simulate_profiles(g: SyntheticCliqueGraph, p: float, replicates: int, seed=0,
                      batch: int = 1000) -> np.ndarray:
    """(replicates, 4) array of observed (n'_1, n'_2, n'_3, n'_>=4) under edge sampling at p.

    Replicates are processed as disjoint copies of the graph, ``batch`` at a
    time. Random draws are consumed in the same order as repeated calls to
    `simulate_edge_sampling`, so both paths agree replicate by replicate.
    """
    from .graph import component_labels

    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    M, E = g.M, len(g.edges)
    out = np.zeros((replicates, 4), dtype=np.int64)
    for start in range(0, replicates, batch):
        R = min(batch, replicates - start)
        keep = rng.random((R, E)) < p
        copy, idx = np.nonzero(keep)
        edges = g.edges[idx] + (copy * M)[:, None]
        labels = component_labels(R * M, edges)
        sizes = np.bincount(labels, minlength=R * M)
        roots = np.flatnonzero(sizes)
        col = np.minimum(sizes[roots], 4) - 1
        np.add.at(out, (start + roots // M, col), 1)
    return out


def relative_error(estimate: float, n: float) -> float:
    if n <= 0:
        raise ValueError("true count must be positive")
    return abs(estimate - n) / n


def true_entity_count(M: int, matches: np.ndarray) -> int:
    from .graph import component_profile
    return component_profile(M, matches).total()


@dataclass
class SweepRow:
    K: int
    L: int
    shingle: int
    m: int = 0
    recall: float | None = None
    reduction_ratio: float | None = None
    elapsed_ms: float = 0.0
    error: str = ""


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        cols = list(SweepRow.__dataclass_fields__)
        w.writerow(cols)
        for r in self.rows:
            d = asdict(r)
            w.writerow(["" if d[c] is None else d[c] for c in cols])
        return buf.getvalue() if fh is None else ""


def sweep(
    corpora: dict[int, ShingleCorpus],
    truth: LabeledPairs | np.ndarray,
    K_values: Iterable[int],
    L_values: Iterable[int],
    seed: int = 0,
    backend: str = "densified",
    bucket_cap: int = 2000,
) -> SweepResult:
    """Sample size, recall and reduction ratio over a (K, L, shingle) grid.

    Signatures are computed once per (shingle, K) for the largest L; the row
    for L uses the first L tables, so rows at larger L see a superset of tables.
    """
    K_values, L_values = sorted(set(K_values)), sorted(set(L_values))
    if not K_values or not L_values or not corpora:
        raise ValueError("sweep ranges must be non-empty")
    result = SweepResult()
    for k in sorted(corpora):
        corpus = corpora[k]
        for K in K_values:
            t_sig = time.perf_counter()
            sig = compute_signatures(corpus, K, L_values[-1], seed, backend)
            t_sig = time.perf_counter() - t_sig
            for L in L_values:
                row = SweepRow(K, L, k)
                t0 = time.perf_counter()
                try:
                    S = sample_pairs(build_tables(sig[:, :K * L], K, L, seed), bucket_cap)
                    row.m = S.m
                    row.reduction_ratio = reduction_ratio(S.m, corpus.M)
                    row.recall = empirical_recall(S, truth)
                except (EstimationError, ValueError) as exc:
                    row.error = str(exc)
                row.elapsed_ms = (time.perf_counter() - t0 + t_sig * L / L_values[-1]) * 1e3
                result.rows.append(row)
    return result


@dataclass
class CompareRow:
    K: int
    L: int
    budget: int
    method: str
    seed: int
    estimate: float | None = None
    std_error: float | None = None
    p: float | None = None
    relative_error: float | None = None
    status: str = "ok"


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class CompareResult:
    rows: list[CompareRow] = field(default_factory=list)

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        cols = list(CompareRow.__dataclass_fields__)
        w.writerow(cols)
        for r in self.rows:
            d = asdict(r)
            w.writerow([_csv_value(d[c]) for c in cols])
        return buf.getvalue() if fh is None else ""

    def mean_relative_error(self) -> dict[tuple[int, str], float]:
        """Mean RE per (L, method); failed runs count as RE = 1 (no usable estimate)."""
        acc: dict[tuple[int, str], list[float]] = {}
        for r in self.rows:
            re = r.relative_error if r.status == "ok" and r.relative_error is not None else 1.0
            acc.setdefault((r.L, r.method), []).append(re)
        return {key: float(np.mean(v)) for key, v in acc.items()}


def compare(
    corpus: ShingleCorpus,
    labeled: LabeledPairs | np.ndarray,
    oracle,
    n_true: int,
    K: int,
    L_values: Sequence[int],
    seeds: Sequence[int],
    backend: str = "densified",
    bucket_cap: int = 2000,
) -> CompareResult:
    """LSHE and the three baselines at matched edge-query budgets.

    For every seed and every L, the LSH sample size m becomes the budget of
    the baselines, which are run with the same seed. Estimator failures are
    recorded in the row status.
    """
    from .baselines import EdgeQueryBudget, bfse_vertex_bfs, prse, rsge_induced_subgraph
    from .graph import component_profile, report_from_profile

    L_values = sorted(set(L_values))
    if not L_values or not len(seeds):
        raise ValueError("compare needs at least one L and one seed")
    M = corpus.M
    out = CompareResult()
    baselines = (
        ("prse", lambda m, s: prse(M, m, oracle, s)),
        ("bfs-vertex", lambda m, s: bfse_vertex_bfs(M, m, oracle, seed=s)),
        ("induced-subgraph", lambda m, s: rsge_induced_subgraph(M, m, oracle, s)),
    )
    for seed in seeds:
        sig = compute_signatures(corpus, K, L_values[-1], seed, backend)
        for L in L_values:
            S = sample_pairs(build_tables(sig[:, :K * L], K, L, seed), bucket_cap)
            row = CompareRow(K, L, S.m, "lshe", seed)
            try:
                p = empirical_recall(S, labeled)
                if p == 0:
                    raise EstimationError("estimator undefined at p=0")
                labels = oracle.query(S.pairs, EdgeQueryBudget(S.m))
                rep = report_from_profile(component_profile(M, S.pairs[labels]), p, S.m, "lshe")
                row.estimate, row.std_error, row.p = rep.estimate, rep.std_error, p
                row.relative_error = relative_error(rep.estimate, n_true)
            except (EstimationError, ValueError) as exc:
                row.status = f"error: {exc}"
            out.rows.append(row)
            for name, run in baselines:
                row = CompareRow(K, L, S.m, name, seed)
                try:
                    if S.m < 1:
                        raise EstimationError("empty LSH sample, no budget")
                    rep = run(S.m, seed)
                    row.estimate, row.std_error = rep.estimate, rep.std_error
                    row.p = None if math.isnan(rep.p) else rep.p
                    if rep.degenerate or not math.isfinite(rep.estimate):
                        row.status = "degenerate"
                    else:
                        row.relative_error = relative_error(rep.estimate, n_true)
                except (EstimationError, ValueError) as exc:
                    row.status = f"error: {exc}"
                out.rows.append(row)
    return out
