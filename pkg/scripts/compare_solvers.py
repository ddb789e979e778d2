"""INCR, AINCR, AG and Cubic-GD on one logistic problem; writes a CSV per solver and a report.

    python scripts/compare_solvers.py --out runs/compare [--data mushrooms.svm]
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from cubicnewton.data import MUSHROOM_SIZES, mushrooms_split, parse_libsvm, split_train_test
from cubicnewton.experiment import ExperimentConfig, Problem, compare, format_report, run_experiment
from cubicnewton.oracle import LogisticProblem


def load(path, seed):
    if path is None:
        return mushrooms_split(seed)
    data = parse_libsvm(path)
    return split_train_test(data, MUSHROOM_SIZES[1] / sum(MUSHROOM_SIZES), seed)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--data", help="LIBSVM file; a synthetic Mushrooms-like set when omitted")
    ap.add_argument("--out", default="runs/compare")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--fraction", type=float, default=0.005, help="INCR subsample size as a fraction of m")
    ap.add_argument("--delta", type=float, default=0.01)
    ap.add_argument("--max-iters", type=int, default=3000)
    ap.add_argument("--grad-tol", type=float, default=1e-10)
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    train, test = load(args.data, args.seed)
    oracle = LogisticProblem.from_dataset(train, dim=max(train.dim, test.dim))
    problem = Problem(oracle, np.zeros(oracle.n), train, test)
    out = Path(args.out)
    common = dict(max_iters=args.max_iters, grad_tol=args.grad_tol, seed=args.seed)
    configs = [
        ExperimentConfig(solver="incr", hessian="shifted_a1", sample_fraction=args.fraction, delta=args.delta,
                         name="incr", **common),
        ExperimentConfig(solver="aincr", name="aincr", **common),
        ExperimentConfig(solver="ag", name="ag", **common),
        ExperimentConfig(solver="cubic_gd", name="cubic_gd", **common),
    ]
    traces = []
    for cfg in configs:
        cfg.output = str(out / f"{cfg.name}.csv")
        tr = run_experiment(cfg, problem)
        last = tr.rows[-1]
        print(f"{cfg.name:>9}: {last.t:5d} iters  f={last.f:.12g}  test_err={last.test_err:.4f}")
        traces.append(tr)
    report = format_report(compare(traces))
    (out / "report.csv").write_text(report)
    print(report, end="")


if __name__ == "__main__":
    main()
