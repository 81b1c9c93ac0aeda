import itertools
import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lshe import records
from lshe.errors import EstimationError
from lshe.minhash import SENTINEL
from lshe.records import LabeledPairs, shingle_corpus
from lshe.sampler import (
    build_tables,
    compute_signatures,
    decode_pairs,
    empirical_recall,
    lsh_sample,
    pair_codes,
    reduction_ratio,
    sample_pairs,
)


def brute_force_pairs(sig, K, L):
    """Pairs that agree on all K values of at least one table."""
    out = set()
    live = [i for i in range(len(sig)) if not (sig[i] == SENTINEL).all()]
    for t in range(L):
        groups = {}
        for i in live:
            groups.setdefault(tuple(sig[i, t * K:(t + 1) * K].tolist()), []).append(i)
        for members in groups.values():
            out.update(itertools.combinations(sorted(members), 2))
    return out


small_sigs = st.integers(1, 3).flatmap(lambda K: st.integers(1, 4).flatmap(
    lambda L: st.tuples(
        st.just(K), st.just(L),
        st.lists(st.lists(st.integers(0, 2), min_size=K * L, max_size=K * L), min_size=1, max_size=14),
    )))


@given(small_sigs)
def test_sample_equals_brute_force(data):
    K, L, rows = data
    sig = np.array(rows, dtype=np.uint64)
    S = sample_pairs(build_tables(sig, K, L))
    assert set(map(tuple, S.pairs.tolist())) == brute_force_pairs(sig, K, L)
    assert (S.pairs[:, 0] < S.pairs[:, 1]).all()
    assert len(np.unique(S.codes)) == S.m


@given(small_sigs, st.randoms())
def test_union_is_invariant_to_table_order(data, rnd):
    K, L, rows = data
    sig = np.array(rows, dtype=np.uint64).reshape(len(rows), L, K)
    perm = list(range(L))
    rnd.shuffle(perm)
    a = sample_pairs(build_tables(sig.reshape(len(rows), -1), K, L))
    b = sample_pairs(build_tables(sig[:, perm, :].reshape(len(rows), -1), K, L))
    assert (a.pairs == b.pairs).all()


def test_sentinel_rows_are_skipped():
    sig = np.full((3, 2), SENTINEL, dtype=np.uint64)
    sig[0] = sig[1] = [1, 2]
    S = sample_pairs(build_tables(sig, 1, 2))
    assert S.pairs.tolist() == [[0, 1]]
    all_empty = np.full((4, 2), SENTINEL, dtype=np.uint64)
    assert sample_pairs(build_tables(all_empty, 1, 2)).m == 0


def test_buckets_view():
    sig = np.array([[5], [5], [7]], dtype=np.uint64)
    t = build_tables(sig, 1, 1)
    groups = sorted(t.buckets(0).values())
    assert groups == [[0, 1], [2]]
    assert sorted(t.bucket_sizes(0).tolist()) == [1, 2]


def test_build_tables_rejects_bad_shape():
    with pytest.raises(ValueError):
        build_tables(np.zeros((3, 5), dtype=np.uint64), 2, 2)


def test_mega_bucket_cap(caplog):
    M = 60
    sig = np.zeros((M, 1), dtype=np.uint64)
    with caplog.at_level(logging.WARNING):
        S = sample_pairs(build_tables(sig, 1, 1, seed=3), bucket_cap=10)
    assert S.capped_buckets == 1
    assert "capped" in caplog.text
    deg = np.bincount(S.pairs.ravel(), minlength=M)
    assert (deg >= 9).all()
    assert S.m < M * (M - 1) // 2
    again = sample_pairs(build_tables(sig, 1, 1, seed=3), bucket_cap=10)
    assert (again.pairs == S.pairs).all()
    full = sample_pairs(build_tables(sig, 1, 1), bucket_cap=M)
    assert full.m == M * (M - 1) // 2


def test_pair_codes_roundtrip():
    pairs = np.array([[3, 1], [0, 9]])
    codes = pair_codes(pairs, 10)
    assert codes.tolist() == [13, 9]
    assert decode_pairs(codes, 10).tolist() == [[1, 3], [0, 9]]


def strings_with_duplicates(rng, n):
    base = ["".join(rng.choice(list("ABCDEFGHIJ"), 12)) for _ in range(n)]
    return base + [s[:-1] + "Z" for s in base[: n // 2]]


def test_sampler_is_deterministic_and_never_compares_records():
    rng = np.random.default_rng(0)
    corpus = shingle_corpus(strings_with_duplicates(rng, 200), 3)
    before = records.similarity_calls
    a = lsh_sample(corpus, 2, 6, seed=5)
    b = lsh_sample(corpus, 2, 6, seed=5)
    assert records.similarity_calls == before
    assert (a.pairs == b.pairs).all()
    c = lsh_sample(corpus, 2, 6, seed=6)
    assert not np.array_equal(a.pairs, c.pairs) or a.m == 0


@pytest.mark.parametrize("backend", ["densified", "classical"])
def test_more_tables_give_superset(backend):
    rng = np.random.default_rng(1)
    corpus = shingle_corpus(strings_with_duplicates(rng, 150), 3)
    sig = compute_signatures(corpus, 2, 12, 0, backend)
    prev = set()
    for L in (3, 6, 12):
        cur = set(map(tuple, sample_pairs(build_tables(sig[:, :2 * L], 2, L)).pairs.tolist()))
        assert prev <= cur
        prev = cur


def test_compute_signatures_backend_check():
    corpus = shingle_corpus(["ABCD"], 2)
    with pytest.raises(ValueError, match="backend"):
        compute_signatures(corpus, 1, 1, 0, "nope")


def test_export_format(tmp_path):
    sig = np.array([[1], [1], [1]], dtype=np.uint64)
    S = sample_pairs(build_tables(sig, 1, 1))
    p = tmp_path / "pairs.csv"
    S.export(p)
    assert p.read_text() == "id_a,id_b\n0,1\n0,2\n1,2\n"


def test_empirical_recall():
    sig = np.array([[1], [1], [2], [2]], dtype=np.uint64)
    S = sample_pairs(build_tables(sig, 1, 1))
    truth = LabeledPairs.from_rows([(0, 1, 1), (1, 2, 1), (0, 3, 0)])
    assert empirical_recall(S, truth) == 0.5
    assert empirical_recall(S, np.array([[2, 3]])) == 1.0
    with pytest.raises(EstimationError, match="p undefined"):
        empirical_recall(S, LabeledPairs.from_rows([(0, 3, 0)]))


def test_reduction_ratio():
    assert reduction_ratio(0, 10) == 1.0
    assert reduction_ratio(45, 10) == 0.0
    assert reduction_ratio(450_000, 354_996) >= 0.99999
    with pytest.raises(ValueError):
        reduction_ratio(0, 1)
