"""Sample size, recall and reduction ratio on the bundled Restaurant data over a (K, L, shingle) grid.

    python scripts/restaurant_sweep.py --out restaurant_sweep.csv
"""

import argparse
import sys

from lshe.datasets import load_restaurant
from lshe.evaluation import sweep
from lshe.records import shingle_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, nargs="+", default=[1, 2, 3, 4])
    ap.add_argument("--l", type=int, nargs="+", default=[5, 10, 20, 30, 50])
    ap.add_argument("--shingle", type=int, nargs="+", default=[3, 6, 9, 12])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()

    ds, truth = load_restaurant()
    strings = ds.strings()
    corpora = {k: shingle_corpus(strings, k) for k in args.shingle}
    res = sweep(corpora, truth, args.k, args.l, seed=args.seed)
    if args.out == "-":
        res.to_csv(sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            res.to_csv(fh)
    total = ds.M * (ds.M - 1) // 2
    for r in res.rows:
        print(f"shingle={r.shingle} K={r.K} L={r.L} m={r.m} ({100 * r.m / total:.2f}% of pairs) "
              f"recall={r.recall}", file=sys.stderr)


if __name__ == "__main__":
    main()
