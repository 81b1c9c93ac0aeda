"""Competing component-count estimators under a shared edge-query budget."""

from __future__ import annotations

import math
import time

import numpy as np

from .errors import BudgetExhausted, EstimationError
from .graph import ComponentProfile, EstimateReport, component_profile, report_from_profile


class EdgeQueryBudget:
    """Counts distinct pair labelings; re-querying a pair is free.

    Seen pairs are kept as sorted key chunks, merged when a newer chunk grows
    at least as large as the one before it.
    """

    def __init__(self, limit: int | None = None):
        self.limit = limit
        self.used = 0
        self._chunks: list[np.ndarray] = []

    @property
    def remaining(self) -> float:
        return math.inf if self.limit is None else self.limit - self.used

    def seen(self, keys: np.ndarray) -> np.ndarray:
        hit = np.zeros(len(keys), dtype=bool)
        for chunk in self._chunks:
            pos = np.minimum(np.searchsorted(chunk, keys), len(chunk) - 1)
            hit |= chunk[pos] == keys
        return hit

    def charge(self, pairs: np.ndarray) -> None:
        """Charge the distinct unseen pairs of a batch.

        If the batch does not fit, the budget is filled up to its limit and
        BudgetExhausted is raised; the caller must discard the batch.
        """
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        keys = np.unique((pairs.min(axis=1) << 32) | pairs.max(axis=1))
        new = keys[~self.seen(keys)]
        exhausted = len(new) > self.remaining
        if exhausted:
            new = new[:int(self.remaining)]
        if len(new):
            self._chunks.append(new)
            while len(self._chunks) > 1 and len(self._chunks[-1]) >= len(self._chunks[-2]):
                top = self._chunks.pop()
                self._chunks[-1] = np.union1d(self._chunks[-1], top)
        self.used += len(new)
        if exhausted:
            raise BudgetExhausted(f"edge-query budget {self.limit} exhausted")


def _n_pairs(M: int) -> int:
    return M * (M - 1) // 2


def uniform_pairs(M: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """m distinct unordered pairs drawn uniformly without replacement."""
    N = _n_pairs(M)
    if not 1 <= m <= N:
        raise ValueError(f"need 1 <= m <= {N}, got {m}")
    if m > N // 4:
        a, b = np.triu_indices(M, k=1)
        pick = rng.choice(N, size=m, replace=False)
        return np.stack([a[pick], b[pick]], axis=1).astype(np.int64)
    codes = np.empty(0, dtype=np.int64)
    while len(codes) < m:
        need = m - len(codes)
        x = rng.integers(M, size=(int(need * 1.1) + 16, 2))
        x = x[x[:, 0] != x[:, 1]]
        c = np.minimum(x[:, 0], x[:, 1]) * M + np.maximum(x[:, 0], x[:, 1])
        # keep first occurrences in draw order so the sample is uniform
        _, first = np.unique(c, return_index=True)
        c = c[np.sort(first)]
        c = c[~np.isin(c, codes)]
        codes = np.concatenate([codes, c[:need]])
    return np.stack([codes // M, codes % M], axis=1)


def prse(M: int, m: int, oracle, seed: int = 0) -> EstimateReport:
    """The LSHE formula applied to m uniformly random pairs, with p = 2m / (M(M-1))."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    pairs = uniform_pairs(M, m, rng)
    budget = EdgeQueryBudget(m)
    labels = oracle.query(pairs, budget)
    profile = component_profile(M, pairs[labels])
    p = m / _n_pairs(M)
    rep = report_from_profile(profile, p, m, "prse", seed=seed, meta={"used": budget.used})
    rep.degenerate = not labels.any() or not math.isfinite(rep.estimate)
    rep.elapsed_ms = (time.perf_counter() - t0) * 1e3
    return rep


def bfse_vertex_bfs(M: int, m: int, oracle, k: int | None = None, seed: int = 0) -> EstimateReport:
    """Explore components of uniformly drawn vertices until the budget runs out.

    Each exploration queries frontier vertices against every undiscovered
    vertex. The estimate is M times the mean of 1/|C(v)| over completed
    explorations; an exploration cut short by the budget is discarded.
    """
    if m < 1:
        raise ValueError("budget must be >= 1")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    budget = EdgeQueryBudget(m)
    inv_sizes = []
    sizes: dict[int, int] = {}
    while k is None or len(inv_sizes) < k:
        v = int(rng.integers(M))
        undiscovered = np.ones(M, dtype=bool)
        undiscovered[v] = False
        frontier = [v]
        comp = 1
        try:
            while frontier:
                u = frontier.pop()
                cand = np.flatnonzero(undiscovered)
                if len(cand) == 0:
                    break
                pairs = np.stack([np.full(len(cand), u), cand], axis=1)
                found = cand[oracle.query(pairs, budget)]
                undiscovered[found] = False
                frontier.extend(found.tolist())
                comp += len(found)
        except BudgetExhausted:
            break
        inv_sizes.append(1.0 / comp)
        sizes[comp] = sizes.get(comp, 0) + 1
        if budget.remaining <= 0 or budget.used == _n_pairs(M):
            break
    if not inv_sizes:
        raise EstimationError("no completed exploration within the budget")
    inv = np.array(inv_sizes)
    se = float(M * inv.std(ddof=1) / math.sqrt(len(inv))) if len(inv) > 1 else None
    rep = EstimateReport(
        float(M * inv.mean()), se, float("nan"), budget.used,
        ComponentProfile(sizes, sum(s * c for s, c in sizes.items())), "bfs-vertex", seed=seed,
        meta={"completed": len(inv), "evaluation_label": "RSGE", "mechanism_label": "BFSE"},
    )
    rep.elapsed_ms = (time.perf_counter() - t0) * 1e3
    return rep


def inclusion_probabilities(s: int, M: int) -> tuple[float, float, float]:
    """P(a fixed set of 1, 2, 3 vertices is inside a uniform s-subset of M vertices)."""
    p1 = s / M
    p2 = p1 * (s - 1) / (M - 1) if M > 1 else 0.0
    p3 = p2 * (s - 2) / (M - 2) if M > 2 else 0.0
    return p1, p2, p3


def induced_subgraph_estimate(profile: ComponentProfile, s: int, M: int) -> tuple[float, tuple[float, float, float]]:
    """Entity-count estimate and solved (n1, n2, n3) from the component profile of an s-vertex induced subgraph."""
    p1, p2, p3 = inclusion_probabilities(s, M)
    n3 = profile[3] / p3 if p3 > 0 else 0.0
    n2 = (profile[2] - 3 * (p2 - p3) * n3) / p2
    n1 = (profile[1] - 2 * (p1 - p2) * n2 - 3 * (p1 - 2 * p2 + p3) * n3) / p1
    return n1 + n2 + n3 + profile.at_least(4) / p1, (n1, n2, n3)


def rsge_induced_subgraph(M: int, m: int, oracle, seed: int = 0) -> EstimateReport:
    """Fully label the subgraph induced by floor(sqrt(2m)) random vertices and scale up.

    Induced subgraphs of cliques are cliques, so a true clique of size c shows
    up as one component whose size is its number of sampled members. Counts
    of true cliques of size <= 3 are recovered by inverting those expectations
    (exact inclusion probabilities for sampling without replacement); observed
    components of size >= 4 are scaled by M / s.
    """
    t0 = time.perf_counter()
    s = min(int(math.isqrt(2 * m)), M)
    if s < 2:
        raise EstimationError("budget too small for a subgraph")
    rng = np.random.default_rng(seed)
    verts = np.sort(rng.choice(M, size=s, replace=False))
    ia, ib = np.triu_indices(s, k=1)
    budget = EdgeQueryBudget(m)
    labels = oracle.query(np.stack([verts[ia], verts[ib]], axis=1), budget)
    profile = component_profile(s, np.stack([ia[labels], ib[labels]], axis=1))

    est, n_star = induced_subgraph_estimate(profile, s, M)
    rep = EstimateReport(
        float(est), None, s / M, budget.used, profile, "induced-subgraph", n_star, seed=seed,
        meta={"vertices": s, "evaluation_label": "BFSE", "mechanism_label": "RSGE"},
    )
    rep.elapsed_ms = (time.perf_counter() - t0) * 1e3
    return rep
