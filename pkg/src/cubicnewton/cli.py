"""Command-line entry point: run, bench, compare and subproblem."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, FormatError, ParseError, SubproblemNonconvergence
from .experiment import (
    THRESHOLDS,
    ExperimentConfig,
    compare,
    format_report,
    make_config,
    read_config_file,
    run_experiment,
)
from .subproblem import CubicModel, solve_exact, solve_gd, solve_lanczos
from .trace import IterateTrace

_CONFIG_KEYS = [f.name for f in ExperimentConfig.__dataclass_fields__.values()]


def _add_config_flags(p):
    p.add_argument("--config", help="flat key = value file")
    for key in _CONFIG_KEYS:
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None, metavar="VALUE")


def _config_from_args(args) -> ExperimentConfig:
    file_values, base = {}, None
    if args.config:
        file_values = read_config_file(args.config)
        base = Path(args.config).parent
    overrides = {k: getattr(args, k) for k in _CONFIG_KEYS if getattr(args, k) is not None}
    return make_config(file_values, overrides, base)


def _summary(config, trace):
    last = trace.rows[-1]
    dest = config.output or "(not written)"
    return f"{config.label}: {last.t} iterations, f={last.f:.12g}, grad_norm={last.grad_norm:.3e} -> {dest}"


def cmd_run(args):
    config = _config_from_args(args)
    trace = run_experiment(config)
    print(_summary(config, trace))


def _bench_one(path_and_overrides):
    path, overrides = path_and_overrides
    config = make_config(read_config_file(path), overrides, Path(path).parent)
    trace = run_experiment(config)
    return _summary(config, trace)


def cmd_bench(args):
    paths = []
    for item in args.configs:
        p = Path(item)
        if p.suffix == ".list":
            lines = [ln.split("#", 1)[0].strip() for ln in p.read_text().splitlines()]
            paths += [str(p.parent / ln) for ln in lines if ln]
        else:
            paths.append(item)
    overrides = {}
    if args.out_dir:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    jobs = []
    for path in paths:
        ov = dict(overrides)
        if args.out_dir:
            ov["output"] = str(Path(args.out_dir) / (Path(path).stem + ".csv"))
        jobs.append((path, ov))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_bench_one, jobs))
    else:
        results = [_bench_one(j) for j in jobs]
    for line in results:
        print(line)


def cmd_compare(args):
    traces = [IterateTrace.read_csv(p) for p in args.traces]
    thresholds = tuple(args.thresholds) if args.thresholds else THRESHOLDS
    text = format_report(compare(traces, thresholds), thresholds)
    if args.output:
        Path(args.output).write_text(text)
    sys.stdout.write(text)


def read_model_file(path) -> CubicModel:
    """``eta = <value>``, ``g = <entries>`` and one ``H = <row>`` line per matrix row."""
    eta, g, rows = None, None, []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        try:
            nums = [float(tok) for tok in value.replace(",", " ").split()]
        except ValueError:
            raise ParseError(f"non-numeric value in {key!r}", lineno) from None
        if not sep or key not in ("eta", "g", "H"):
            raise ParseError("expected 'eta =', 'g =' or 'H =' line", lineno)
        if key == "eta":
            if len(nums) != 1:
                raise ParseError("eta takes one value", lineno)
            eta = nums[0]
        elif key == "g":
            g = np.array(nums)
        else:
            rows.append(nums)
    if eta is None or g is None or not rows:
        raise FormatError(f"{path}: need eta, g and H")
    if any(len(r) != len(rows[0]) for r in rows):
        raise FormatError(f"{path}: ragged H rows")
    return CubicModel(g, np.array(rows), eta)


def cmd_subproblem(args):
    model = read_model_file(args.file)
    if args.method == "exact":
        sol = solve_exact(model, tol=args.tol)
    elif args.method == "lanczos":
        sol = solve_lanczos(model, max_dim=args.max_dim, tol=args.tol)
    else:
        sol = solve_gd(model, tol=args.tol)
    np.set_printoptions(precision=12)
    print("step =", " ".join(repr(float(v)) for v in sol.step))
    print(f"step_norm = {sol.step_norm!r}")
    print(f"multiplier = {sol.multiplier!r}")
    print(f"model_decrease = {sol.model_decrease!r}")
    print(f"kkt_residual = {sol.kkt_residual!r}")
    print(f"psd_certificate = {sol.psd_certificate!r}")
    print(f"iterations = {sol.iterations}")
    print(f"approximate = {sol.approximate}")


def build_parser():
    parser = argparse.ArgumentParser(prog="cubicnewton", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="run several config files (or .list files naming them)")
    p.add_argument("configs", nargs="+")
    p.add_argument("--out-dir", help="write <config stem>.csv here")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("compare", help="iterations/seconds to reach f_best + tau")
    p.add_argument("traces", nargs="+")
    p.add_argument("--thresholds", type=float, nargs="+")
    p.add_argument("--output")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("subproblem", help="solve one cubic model from a text file")
    p.add_argument("file")
    p.add_argument("--method", choices=("exact", "lanczos", "gd"), default="exact")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-dim", type=int, default=None)
    p.set_defaults(func=cmd_subproblem)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ConfigurationError, FormatError, ParseError, SubproblemNonconvergence, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
