"""LSHE against the three sampling baselines on synthetic person records at matched budgets.

    python scripts/people_compare.py --records 50000 --seeds 5 --out compare.csv
"""

import argparse
import sys

from lshe.datasets import synthetic_people
from lshe.evaluation import compare, entity_match_pairs
from lshe.oracle import ground_truth_oracle
from lshe.records import shingle_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--records", type=int, default=50000)
    ap.add_argument("--data-seed", type=int, default=0)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--l", type=int, nargs="+", default=[10, 20, 30])
    ap.add_argument("--shingle", type=int, default=4)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()

    ds = synthetic_people(args.records, seed=args.data_seed)
    corpus = shingle_corpus(ds.strings(), args.shingle)
    n_true = int(ds.entity.max()) + 1
    res = compare(corpus, entity_match_pairs(ds.entity), ground_truth_oracle(ds.entity),
                  n_true, args.k, args.l, list(range(args.seeds)))
    if args.out == "-":
        res.to_csv(sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            res.to_csv(fh)
    for (L, method), re in sorted(res.mean_relative_error().items()):
        print(f"L={L:3d} {method:17s} mean RE = {re:.4f}", file=sys.stderr)


if __name__ == "__main__":
    main()
