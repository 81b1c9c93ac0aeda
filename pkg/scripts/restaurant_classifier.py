"""Train the linear pair classifier on part of the Restaurant matches and compare
LSHE under the classifier with LSHE under ground truth on the same sample.

    python scripts/restaurant_classifier.py --shingle 3 --k 2 --l 20
"""

import argparse

import numpy as np

from lshe.datasets import load_restaurant
from lshe.graph import component_profile, lshe
from lshe.oracle import classifier_oracle, ground_truth_oracle, train_linear, training_pairs
from lshe.records import shingle_corpus
from lshe.sampler import empirical_recall, lsh_sample


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shingle", type=int, default=3)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--l", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--train-pairs", type=int, default=8000)
    args = ap.parse_args()

    ds, truth = load_restaurant()
    corpus = shingle_corpus(ds.strings(), args.shingle)
    S = lsh_sample(corpus, args.k, args.l, args.seed)
    p = empirical_recall(S, truth)
    train = training_pairs(ds.M, truth, args.train_pairs, seed=args.seed, candidates=S.pairs)
    model = train_linear(corpus, train)
    clf = classifier_oracle(model, corpus=corpus)
    gt = ground_truth_oracle(ds.entity)

    y_clf, y_gt = clf.query(S.pairs), gt.query(S.pairs)
    est_clf = lshe(component_profile(ds.M, S.pairs[y_clf]), p)
    est_gt = lshe(component_profile(ds.M, S.pairs[y_gt]), p)
    tp = int((y_clf & y_gt).sum())
    print(f"sample: m={S.m} pairs, p={p:.3f}")
    print(f"classifier on sample: precision={tp / max(y_clf.sum(), 1):.3f} "
          f"recall={tp / max(y_gt.sum(), 1):.3f}")
    print(f"LSHE ground truth={est_gt:.1f} classifier={est_clf:.1f} "
          f"gap={abs(est_clf - est_gt) / est_gt:.4f}")
    print("note: training pairs overlap the sample, so this is an in-sample check",
          f"({np.isin(train.id_a * ds.M + train.id_b, S.codes).sum()} shared pairs)")


if __name__ == "__main__":
    main()
