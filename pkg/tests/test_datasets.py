import numpy as np

from lshe.datasets import entity_sizes, load_restaurant, synthetic_people
from lshe.evaluation import clique_edges


def test_restaurant_bundle_matches_published_counts():
    ds, truth = load_restaurant()
    assert ds.M == 864
    assert len(truth.matches()) == 112
    assert len(np.unique(ds.entity)) == 752
    assert {tuple(x) for x in truth.matches().tolist()} == {tuple(x) for x in clique_edges(ds.entity).tolist()}


def test_entity_sizes_cover_exactly():
    rng = np.random.default_rng(0)
    for M in (1, 7, 1000):
        s = entity_sizes(M, {1: 0.8, 2: 0.2}, rng)
        assert s.sum() == M and (s >= 1).all()


def test_synthetic_people_shape_and_determinism():
    a = synthetic_people(3000, seed=5)
    b = synthetic_people(3000, seed=5)
    assert a.M == 3000 and a.schema == ["first", "last", "age", "address", "city", "zip"]
    assert [r.attributes for r in a.records] == [r.attributes for r in b.records]
    assert np.array_equal(a.entity, b.entity)
    singletons = np.mean(np.bincount(a.entity)[a.entity] == 1)
    assert singletons >= 0.7
    assert synthetic_people(3000, seed=6).records[0] != a.records[0]
