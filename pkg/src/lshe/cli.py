"""Command-line interface: estimate, sweep, compare, simulate, train-oracle."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .baselines import EdgeQueryBudget
from .datasets import load_restaurant, synthetic_people
from .errors import BudgetExhausted, DataError, EstimationError
from .evaluation import (
    compare,
    entity_match_pairs,
    relative_error,
    simulate_profiles,
    sweep,
    synth_graph,
    true_entity_count,
)
from .graph import SamplerConfig, estimate_unique_entities, lshe_coefficients, lshe_variance
from .oracle import (
    LinearModel,
    TrainConfig,
    classifier_oracle,
    ground_truth_oracle,
    train_linear,
    training_pairs,
)
from .records import Dataset, LabeledPairs, load_labeled_pairs, load_records, shingle_corpus
from .sampler import lsh_sample

log = logging.getLogger("lshe")


def _int_list(text: str) -> list[int]:
    """Parse "5", "1,2,4" or an inclusive range "5:100:5"."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            bits = [int(x) for x in part.split(":")]
            lo, hi = bits[0], bits[1]
            step = bits[2] if len(bits) > 2 else 1
            out.extend(range(lo, hi + 1, step))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty integer list {text!r}")
    return out


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _counts(text: str) -> dict[int, int]:
    """Clique counts as "size:count,...", e.g. "1:700,2:100,3:50"."""
    out = {}
    for part in text.split(","):
        size, count = part.split(":")
        out[int(size)] = int(count)
    return out


def _stderr_mode(text: str) -> tuple[str, int]:
    if text == "plugin":
        return "plugin", 0
    kind, _, reps = text.partition(",")
    if kind != "reseed" or not reps.isdigit() or int(reps) < 2:
        raise argparse.ArgumentTypeError("expected 'plugin' or 'reseed,R' with R >= 2")
    return kind, int(reps)


# ---------------------------------------------------------------- data access

class Inputs:
    """Records, truth and oracle resolved from the common flags."""

    def __init__(self, args):
        self.args = args
        self.dataset, self.truth = self._load()
        self.M = self.dataset.M

    def _load(self) -> tuple[Dataset, LabeledPairs | None]:
        a = self.args
        schema = a.schema.split(",") if a.schema else None
        if a.dataset == "restaurant":
            ds, truth = load_restaurant() if schema is None else load_restaurant(schema)
        elif a.dataset and a.dataset.startswith("people:"):
            ds, truth = synthetic_people(int(a.dataset.split(":", 1)[1]), seed=a.data_seed), None
        elif a.records:
            ds = load_records(a.records, schema, a.delimiter, a.entity_column)
            truth = None
        else:
            raise DataError("give --records PATH or --dataset {restaurant,people:M}")
        if a.truth:
            truth = load_labeled_pairs(a.truth, ds.M, a.delimiter)
        return ds, truth

    def labeled(self, path: str | None = None):
        """Labeled matches used for p: an explicit file, then --truth, then the entity column."""
        if path:
            return load_labeled_pairs(path, self.M, self.args.delimiter)
        if self.truth is not None:
            return self.truth
        if self.dataset.entity is not None:
            return entity_match_pairs(self.dataset.entity)
        raise DataError("no labeled matches: give --truth or --entity-column")

    def truth_oracle(self):
        if self.dataset.entity is not None:
            return ground_truth_oracle(self.dataset.entity)
        if self.truth is not None:
            return ground_truth_oracle(self.truth)
        raise DataError("truth oracle needs --truth or --entity-column")

    def oracle(self, spec: str):
        if spec == "truth":
            return self.truth_oracle()
        if spec.startswith("model:"):
            model = LinearModel.load(spec[len("model:"):])
            return classifier_oracle(model, self.dataset)
        raise DataError(f"unknown oracle {spec!r}; use truth or model:PATH")

    def true_count(self) -> int | None:
        if self.dataset.entity is not None:
            return int(len(np.unique(self.dataset.entity)))
        if self.truth is not None:
            return true_entity_count(self.M, self.truth.matches())
        return None


def _write(out: str | None, text: str) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- subcommands

def cmd_estimate(args) -> int:
    inp = Inputs(args)
    cfg = SamplerConfig(args.k, args.l, args.shingle, args.seed, args.backend, args.bucket_cap)
    corpus = shingle_corpus(inp.dataset.strings(), args.shingle)
    labeled = inp.labeled(args.recall_truth)
    oracle = inp.oracle(args.oracle)
    budget = EdgeQueryBudget(args.budget) if args.budget else None
    rep = estimate_unique_entities(inp.dataset, cfg, labeled, oracle, corpus=corpus,
                                   budget=budget, export_pairs=args.export_pairs)
    kind, reps = args.stderr
    rep.meta["stderr_method"] = "plugin"
    if kind == "reseed":
        estimates = [rep.estimate]
        for r in range(1, reps):
            c = SamplerConfig(args.k, args.l, args.shingle, args.seed + r, args.backend, args.bucket_cap)
            estimates.append(estimate_unique_entities(inp.dataset, c, labeled, oracle, corpus=corpus).estimate)
        rep.meta["plugin_std_error"] = rep.std_error
        rep.meta["stderr_method"] = f"reseed,{reps}"
        rep.std_error = float(np.std(estimates, ddof=1))
    n = inp.true_count()
    if n:
        rep.meta["relative_error"] = relative_error(rep.estimate, n)
    _write(args.out, rep.to_json(indent=2) + "\n")
    return 0


def cmd_sweep(args) -> int:
    inp = Inputs(args)
    corpora = {k: shingle_corpus(inp.dataset.strings(), k) for k in args.shingle}
    res = sweep(corpora, inp.labeled(args.recall_truth), args.k, args.l, args.seed,
                args.backend, args.bucket_cap)
    _write(args.out, res.to_csv())
    return 0


def cmd_compare(args) -> int:
    inp = Inputs(args)
    n = inp.true_count()
    if n is None:
        raise DataError("compare needs the true entity count: give --truth or --entity-column")
    corpus = shingle_corpus(inp.dataset.strings(), args.shingle)
    seeds = list(range(args.seed, args.seed + args.repeats))
    res = compare(corpus, inp.labeled(args.recall_truth), inp.oracle(args.oracle), n,
                  args.k, args.l, seeds, args.backend, args.bucket_cap)
    _write(args.out, res.to_csv())
    return 0


def cmd_simulate(args) -> int:
    if args.kind == "people":
        ds = synthetic_people(args.size, seed=args.seed)
        buf = _people_csv(ds)
        _write(args.out, buf)
        return 0
    g = synth_graph(args.counts, args.seed)
    n = g.n
    rng = np.random.default_rng(args.seed)
    rows = []
    for p in args.p:
        c2, c3 = lshe_coefficients(p)
        obs = simulate_profiles(g, p, args.replicates, rng)
        est = obs[:, 0] + c2 * obs[:, 1] + c3 * obs[:, 2] + obs[:, 3]
        var_theory = lshe_variance(g.counts.get(2, 0), g.counts.get(3, 0), p)
        rows.append([p, n, args.replicates, repr(float(est.mean())),
                     repr(float(est.std(ddof=1) / math.sqrt(len(est)))),
                     repr(float(est.var(ddof=1))), repr(float(var_theory))])
    lines = ["p,n,replicates,mean_estimate,std_error_of_mean,empirical_variance,theoretical_variance"]
    lines += [",".join(str(x) for x in r) for r in rows]
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _people_csv(ds: Dataset) -> str:
    import io
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(ds.schema) + ["entity"])
    for rec, e in zip(ds.records, ds.entity.tolist()):
        w.writerow(list(rec.attributes) + [e])
    return buf.getvalue()


def cmd_train_oracle(args) -> int:
    if not args.out:
        raise DataError("train-oracle needs --out MODEL_PATH")
    inp = Inputs(args)
    corpus = shingle_corpus(inp.dataset.strings(), args.shingle)
    truth = inp.dataset.entity if inp.dataset.entity is not None else inp.truth
    if truth is None:
        raise DataError("train-oracle needs --truth or --entity-column")
    total = inp.M * (inp.M - 1) // 2
    n_pairs = args.train_pairs or max(2, int(total * 1e-4))
    candidates = None
    if args.negatives == "lsh":
        candidates = lsh_sample(corpus, args.k, args.l, args.seed + 1, args.backend, args.bucket_cap).pairs
    pairs = training_pairs(inp.M, truth, n_pairs, args.seed, candidates)
    model = train_linear(corpus, pairs, TrainConfig(seed=args.seed), dim=args.dim)
    model.meta["training_fraction_of_pairs"] = len(pairs) / total
    model.meta["negatives"] = args.negatives
    model.save(args.out)
    sys.stdout.write(json.dumps(model.meta, indent=2, sort_keys=True) + "\n")
    return 0


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser, multi: bool = False, multi_l: bool = False) -> None:
    p.add_argument("--records", help="delimited record file with a header row")
    p.add_argument("--dataset", help="built-in data: 'restaurant' or 'people:M' (synthetic)")
    p.add_argument("--data-seed", type=int, default=0, help="seed for --dataset people:M")
    p.add_argument("--schema", help="comma-separated attribute columns (default: all)")
    p.add_argument("--entity-column", help="column holding a ground-truth entity id")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--truth", help="labeled pairs file id_a,id_b,label")
    p.add_argument("--recall-truth", help="separate labeled pairs used only to estimate p")
    if multi:
        p.add_argument("--k", type=_int_list, default=[1], help="K values, e.g. 1,2 or 15:30:3")
        p.add_argument("--l", type=_int_list, default=[20], help="L values, e.g. 5:100:5")
        p.add_argument("--shingle", type=_int_list, default=[3], help="shingle lengths")
    else:
        p.add_argument("--k", type=int, default=1, help="minhash values per bucket key")
        if multi_l:
            p.add_argument("--l", type=_int_list, default=[10, 20, 30],
                           help="numbers of hash tables, one matched budget each")
        else:
            p.add_argument("--l", type=int, default=20, help="number of hash tables")
        p.add_argument("--shingle", type=int, default=3, help="character k-gram length")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=["densified", "classical"], default="densified")
    p.add_argument("--bucket-cap", type=int, default=2000)
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lshe", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="LSH sample, label, count components, estimate")
    _common(p)
    p.add_argument("--budget", type=int, help="cap on distinct oracle queries")
    p.add_argument("--oracle", default="truth", help="truth or model:PATH")
    p.add_argument("--export-pairs", help="write the sampled pairs as id_a,id_b")
    p.add_argument("--stderr", type=_stderr_mode, default=("plugin", 0),
                   help="'plugin' (default) or 'reseed,R' for the spread over R hash seeds")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="sample size, recall and reduction ratio over a K/L/shingle grid")
    _common(p, multi=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="LSHE against the baselines at matched budgets")
    _common(p, multi_l=True)
    p.add_argument("--oracle", default="truth", help="truth or model:PATH")
    p.add_argument("--repeats", type=int, default=1, help="number of consecutive seeds")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="synthetic studies")
    p.add_argument("--kind", choices=["graph", "people"], default="graph")
    p.add_argument("--counts", type=_counts, default={1: 700, 2: 100, 3: 50},
                   help="clique counts, e.g. 1:700,2:100,3:50")
    p.add_argument("--p", type=_float_list, default=[0.3, 0.5, 0.8], help="edge sampling probabilities")
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--size", type=int, default=50000, help="record count for --kind people")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train-oracle", help="fit a linear pair classifier and save it")
    _common(p)
    p.add_argument("--train-pairs", type=int, help="training pairs (default: 0.01%% of all pairs)")
    p.add_argument("--negatives", choices=["uniform", "lsh"], default="uniform",
                   help="draw non-matches uniformly or from an LSH sample at --k/--l")
    p.add_argument("--dim", type=int, default=1 << 18, help="hashed feature dimension")
    p.set_defaults(func=cmd_train_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, EstimationError, BudgetExhausted, ValueError, OSError) as exc:
        print(f"lshe {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
