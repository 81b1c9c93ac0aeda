import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lshe.baselines import (
    EdgeQueryBudget,
    bfse_vertex_bfs,
    induced_subgraph_estimate,
    inclusion_probabilities,
    prse,
    rsge_induced_subgraph,
    uniform_pairs,
)
from lshe.errors import BudgetExhausted, EstimationError
from lshe.evaluation import clique_edges
from lshe.graph import component_profile
from lshe.oracle import EntityOracle


class CountingOracle(EntityOracle):
    def __init__(self, entity):
        super().__init__(entity)
        self.asked = set()

    def _label(self, a, b):
        self.asked.update(zip(a.tolist(), b.tolist()))
        return super()._label(a, b)


batches = st.lists(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9))
                            .filter(lambda t: t[0] != t[1]), max_size=8), max_size=8)


@given(batches, st.integers(0, 20))
def test_budget_matches_set_oracle(batches, limit):
    budget = EdgeQueryBudget(limit)
    seen = set()
    for batch in batches:
        keys = {(min(a, b), max(a, b)) for a, b in batch}
        new = keys - seen
        if len(seen) + len(new) > limit:
            with pytest.raises(BudgetExhausted):
                budget.charge(np.array(batch).reshape(-1, 2))
            assert budget.used == limit
            return
        budget.charge(np.array(batch).reshape(-1, 2))
        seen |= keys
        assert budget.used == len(seen) <= limit


def test_budget_requery_is_free():
    b = EdgeQueryBudget(2)
    b.charge(np.array([[0, 1], [1, 0], [2, 3]]))
    b.charge(np.array([[3, 2]]))
    assert b.used == 2 and b.remaining == 0
    with pytest.raises(BudgetExhausted):
        b.charge(np.array([[4, 5]]))
    assert EdgeQueryBudget().remaining == math.inf


@pytest.mark.parametrize("M,m", [(6, 3), (6, 12), (30, 7)])
def test_uniform_pairs_distinct_and_uniform(M, m):
    rng = np.random.default_rng(0)
    N = M * (M - 1) // 2
    counts = np.zeros((M, M))
    reps = 3000
    for _ in range(reps):
        pairs = uniform_pairs(M, m, rng)
        assert len(pairs) == m and (pairs[:, 0] < pairs[:, 1]).all()
        assert len({tuple(x) for x in pairs.tolist()}) == m
        counts[pairs[:, 0], pairs[:, 1]] += 1
    freq = counts[np.triu_indices(M, 1)] / reps
    q = m / N
    assert np.abs(freq - q).max() < 5 * math.sqrt(q * (1 - q) / reps)
    with pytest.raises(ValueError):
        uniform_pairs(M, N + 1, rng)


def test_prse_exhaustive_is_exact():
    ent = np.array([0, 0, 1, 2, 2, 2, 3])
    rep = prse(7, 21, EntityOracle(ent), seed=1)
    assert rep.p == 1.0 and rep.estimate == 4 and rep.method == "prse"


def test_prse_m1_on_three_vertices_exact_expectation():
    # one true edge (0,1): the sampled pair is that edge with prob 1/3 (estimate 0)
    # and a non-edge otherwise (estimate 3); the expectation is the true count 2
    ent = np.array([0, 0, 1])
    est = np.array([prse(3, 1, EntityOracle(ent), seed=s).estimate for s in range(3000)])
    zero = np.isclose(est, 0.0, atol=1e-9)
    assert (zero | np.isclose(est, 3.0)).all()
    assert abs(zero.mean() - 1 / 3) < 3 * math.sqrt(2 / 9 / 3000)


def test_prse_degenerate_flag():
    ent = np.arange(200)
    ent[:2] = 0
    rep = prse(200, 1, EntityOracle(ent), seed=0)
    assert rep.degenerate or rep.estimate >= 0


def test_bfs_trivial_cases():
    M = 8
    rep = bfse_vertex_bfs(M, 100, EntityOracle(np.arange(M)), seed=0)
    assert rep.estimate == M and rep.meta["completed"] >= 1 and rep.m <= 100
    rep = bfse_vertex_bfs(M, 100, EntityOracle(np.zeros(M, dtype=int)), k=1, seed=0)
    assert rep.estimate == pytest.approx(1.0)


def test_bfs_no_completed_exploration():
    with pytest.raises(EstimationError, match="no completed exploration"):
        bfse_vertex_bfs(50, 10, EntityOracle(np.arange(50)), seed=0)
    with pytest.raises(ValueError):
        bfse_vertex_bfs(5, 0, EntityOracle(np.arange(5)))


def test_bfs_exact_expectation_m4():
    # components {0}, {1,2,3}: E = 4 * (1/4 * 1 + 3/4 * 1/3) = 2
    ent = np.array([0, 1, 1, 1])
    est = np.array([bfse_vertex_bfs(4, 6, EntityOracle(ent), k=1, seed=s).estimate for s in range(20000)])
    assert set(np.round(est, 9)) <= {4.0, round(4 / 3, 9)}
    assert abs(est.mean() - 2.0) < 3 * est.std() / math.sqrt(len(est))


@pytest.mark.parametrize("ent", [[0, 1, 1, 2, 2, 2, 3, 4], [0, 0, 0, 0, 1, 1, 2, 3]])
def test_bfs_per_start_vertex_matches_bfs_oracle(ent):
    ent = np.array(ent)
    M = len(ent)
    sizes = np.bincount(ent)[ent]
    # with k=1 the estimate is M / |C(v)| for the drawn start vertex v
    for s in range(40):
        rep = bfse_vertex_bfs(M, 10**6, EntityOracle(ent), k=1, seed=s)
        assert rep.estimate * min(sizes) <= M + 1e-9
        assert any(abs(rep.estimate - M / c) < 1e-9 for c in set(sizes.tolist()))
    assert np.mean(M / sizes) == pytest.approx(len(np.unique(ent)))


def test_bfs_respects_budget_and_stops_when_all_pairs_known():
    ent = np.array([0, 0, 1, 2])
    oracle = CountingOracle(ent)
    rep = bfse_vertex_bfs(4, 10**6, oracle, seed=0)
    assert rep.m <= 6 and len(oracle.asked) <= 6


def test_inclusion_probabilities():
    assert inclusion_probabilities(5, 5) == (1.0, 1.0, 1.0)
    p1, p2, p3 = inclusion_probabilities(3, 10)
    assert (p1, p2, p3) == pytest.approx((0.3, 3 * 2 / (10 * 9), 6 / 720))


@pytest.mark.parametrize("ent,s", [([0, 1, 1, 2, 2, 2, 3], 3), ([0, 0, 1, 2, 2, 2, 3, 3], 4)])
def test_induced_subgraph_exactly_unbiased(ent, s):
    ent = np.array(ent)
    M = len(ent)
    total = 0.0
    subsets = list(itertools.combinations(range(M), s))
    for verts in subsets:
        sub = ent[list(verts)]
        prof = component_profile(s, clique_edges(sub))
        total += induced_subgraph_estimate(prof, s, M)[0]
    assert total / len(subsets) == pytest.approx(len(np.unique(ent)))


def test_induced_subgraph_run():
    ent = np.array([0, 1, 1, 2, 2, 2, 3])
    rep = rsge_induced_subgraph(7, 25, EntityOracle(ent), seed=0)
    assert rep.meta["vertices"] == 7 and rep.m == 21
    assert rep.estimate == pytest.approx(4) and rep.std_error is None
    with pytest.raises(EstimationError, match="too small"):
        rsge_induced_subgraph(7, 1, EntityOracle(ent), seed=0)


def test_baselines_label_meta():
    ent = np.arange(10)
    assert rsge_induced_subgraph(10, 10, EntityOracle(ent)).meta["mechanism_label"] == "RSGE"
    assert bfse_vertex_bfs(10, 100, EntityOracle(ent)).meta["mechanism_label"] == "BFSE"
