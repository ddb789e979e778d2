"""INCR with subsampled Hessians of size |S_H| = c m for several c; prints iterations to f_best + tau.

    python scripts/subsample_sweep.py --out runs/sweep [--data mushrooms.svm]
"""

import argparse
from pathlib import Path

import numpy as np

from cubicnewton.data import MUSHROOM_SIZES, mushrooms_split, parse_libsvm, split_train_test
from cubicnewton.experiment import ExperimentConfig, Problem, run_experiment
from cubicnewton.oracle import LogisticProblem


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--data")
    ap.add_argument("--out", default="runs/sweep")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.001, 0.005, 0.025, 0.125])
    ap.add_argument("--delta", type=float, default=0.01)
    ap.add_argument("--max-iters", type=int, default=3000)
    ap.add_argument("--with-exact", action="store_true", help="add an exact-Hessian run")
    args = ap.parse_args()

    if args.data:
        train, test = split_train_test(parse_libsvm(args.data), MUSHROOM_SIZES[1] / sum(MUSHROOM_SIZES), args.seed)
    else:
        train, test = mushrooms_split(args.seed)
    oracle = LogisticProblem.from_dataset(train, dim=max(train.dim, test.dim))
    problem = Problem(oracle, np.zeros(oracle.n), train, test)

    runs = {}
    for c in args.fractions:
        cfg = ExperimentConfig(solver="incr", hessian="shifted_a1", sample_fraction=c, delta=args.delta,
                               max_iters=args.max_iters, grad_tol=1e-10, seed=args.seed,
                               output=str(Path(args.out) / f"incr_{c:g}.csv"))
        runs[f"{c:g}m"] = run_experiment(cfg, problem)
    if args.with_exact:
        cfg = ExperimentConfig(solver="incr", max_iters=args.max_iters, grad_tol=1e-10,
                               output=str(Path(args.out) / "incr_exact.csv"))
        runs["exact"] = run_experiment(cfg, problem)

    f_best = min(float(np.min(tr.f)) for tr in runs.values())
    taus = (1e-2, 1e-4, 1e-6, 1e-8)
    print("|S_H|".rjust(8) + "".join(f"{tau:>10g}" for tau in taus) + "   seconds")
    for label, tr in runs.items():
        cells = []
        for tau in taus:
            hit = np.flatnonzero(tr.f <= f_best + tau)
            cells.append(str(tr.rows[hit[0]].t) if hit.size else "-")
        secs = tr.rows[-1].time_s
        print(label.rjust(8) + "".join(c.rjust(10) for c in cells) + f"{secs:10.1f}")


if __name__ == "__main__":
    main()
