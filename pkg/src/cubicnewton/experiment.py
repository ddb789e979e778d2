"""Experiment configuration, single runs and trace comparison reports."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .aincr import AincrParams, run_aincr
from .baselines import BaselineConfig, run_baseline
from .data import Dataset, error_monitor, logistic_toy, mushrooms_split, parse_libsvm, split_train_test
from .errors import ConfigurationError, FormatError
from .incr import IncrConfig, run_incr
from .multistage import run_multistage
from .oracle import HessianStrategy, LogisticProblem, SmoothnessInfo, make_quadratic_problem
from .trace import IterateTrace

SOLVERS = ("incr", "aincr", "multistage", "cubic_gd", "ag")
SYNTHETIC = ("mushrooms", "toy", "quadratic")
THRESHOLDS = (1e-2, 1e-4, 1e-6, 1e-8)
UNREACHED = "unreached"


@dataclass
class ExperimentConfig:
    """One solver run on one problem.

    The problem is the LIBSVM file ``dataset`` (split by ``test_fraction``
    unless ``test_dataset`` is given) or the ``synthetic`` generator.
    ``sample_fraction`` takes precedence over ``sample_count``. Constants left
    as None are derived from the data: ``lam = 1/m``, the logistic gamma
    bound (times ``gamma_scale``) and the max-row-norm L.
    """

    solver: str = "incr"
    dataset: Optional[str] = None
    test_dataset: Optional[str] = None
    synthetic: str = "mushrooms"
    synthetic_m: int = 500
    synthetic_n: int = 20
    data_seed: int = 0
    test_fraction: float = 0.2
    hessian: str = "exact"
    sample_count: Optional[int] = None
    sample_fraction: Optional[float] = None
    delta: float = 0.0
    gamma: Optional[float] = None
    gamma_scale: float = 1.0
    lam: Optional[float] = None
    L: Optional[float] = None
    eta_policy: str = "fixed"
    alpha_schedule: str = "convex"
    R: float = 1e6
    mu_u: Optional[float] = None
    R0: Optional[float] = None
    max_iters: int = 1000
    grad_tol: float = 1e-8
    subproblem: str = "auto"
    seed: int = 0
    errors: bool = True
    output: Optional[str] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"solver must be one of {', '.join(SOLVERS)}")
        if self.dataset is None and self.synthetic not in SYNTHETIC:
            raise ConfigurationError(f"synthetic must be one of {', '.join(SYNTHETIC)}")
        if self.sample_fraction is not None and not 0.0 < self.sample_fraction <= 1.0:
            raise ConfigurationError("sample_fraction must lie in (0, 1]")
        for key in ("dataset", "test_dataset"):
            path = getattr(self, key)
            if path is not None and not Path(path).is_file():
                raise ConfigurationError(f"{key}: no such file {path}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigurationError("test_fraction must lie in (0, 1)")
        if not self.gamma_scale > 0:
            raise ConfigurationError("gamma_scale must be positive")

    @property
    def label(self):
        return self.name or self.solver


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, text):
    if key not in _TYPES:
        raise ConfigurationError(f"unknown key {key!r}")
    if not isinstance(text, str):
        return text
    text = text.strip()
    kind = _TYPES[key]
    optional = kind.startswith("Optional")
    if optional and text.lower() in ("", "none", "auto"):
        return None
    base = kind.removeprefix("Optional[").rstrip("]")
    try:
        if base == "int":
            return int(float(text)) if float(text).is_integer() else int(text)
        if base == "float":
            return float(text)
        if base == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot read {text!r} as {base}") from None
    return text


def read_config_file(path) -> Dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        values[key.strip()] = value.strip()
    return values


def make_config(file_values: Optional[Dict] = None, overrides: Optional[Dict] = None, base_dir=None) -> ExperimentConfig:
    """Merge file values with overrides (overrides win) into a config.

    Relative ``dataset``/``test_dataset``/``output`` paths from a file are
    resolved against ``base_dir``.
    """
    merged = {}
    for source, rebase in ((file_values or {}, base_dir), (overrides or {}, None)):
        for key, value in source.items():
            if value is None:
                continue
            value = _coerce(key, value)
            if rebase is not None and key in ("dataset", "test_dataset", "output") and value is not None:
                value = str(Path(rebase) / value)
            merged[key] = value
    return ExperimentConfig(**merged)


@dataclass
class Problem:
    oracle: object
    x0: np.ndarray
    train: Optional[Dataset] = None
    test: Optional[Dataset] = None


def build_problem(config: ExperimentConfig) -> Problem:
    train = test = None
    if config.dataset is not None:
        data = parse_libsvm(config.dataset)
        if config.test_dataset is not None:
            test = parse_libsvm(config.test_dataset)
            dim = max(data.dim, test.dim)
            train, test = Dataset(data.samples, dim, data.name), Dataset(test.samples, dim, test.name)
        else:
            train, test = split_train_test(data, config.test_fraction, config.data_seed)
    elif config.synthetic == "mushrooms":
        train, test = mushrooms_split(config.data_seed)
    elif config.synthetic == "toy":
        data = logistic_toy(config.synthetic_m, config.synthetic_n, config.data_seed)
        train, test = split_train_test(data, config.test_fraction, config.data_seed)
    else:
        rng = np.random.default_rng(config.data_seed)
        n = config.synthetic_n
        B = rng.standard_normal((n, n))
        Q = B @ B.T / n + (config.lam if config.lam is not None else 0.1) * np.eye(n)
        oracle = make_quadratic_problem(Q, rng.standard_normal(n))
        return Problem(oracle, np.zeros(n))
    oracle = LogisticProblem.from_dataset(train, lam=config.lam)
    if config.gamma is not None or config.gamma_scale != 1.0:
        gamma = config.gamma if config.gamma is not None else oracle.smoothness.gamma * config.gamma_scale
        oracle = LogisticProblem.from_dataset(train, lam=config.lam, gamma=gamma)
    return Problem(oracle, np.zeros(oracle.n), train, test)


def _smoothness(config: ExperimentConfig, oracle) -> SmoothnessInfo:
    sm = oracle.smoothness
    if config.L is not None:
        sm = dataclasses.replace(sm, lipschitz_grad=config.L)
    if config.gamma is not None:
        sm = dataclasses.replace(sm, gamma=config.gamma)
    return sm


def _strategy(config: ExperimentConfig, oracle, sm) -> HessianStrategy:
    count = config.sample_count
    if config.sample_fraction is not None:
        count = max(1, int(round(config.sample_fraction * oracle.component_count)))
    if config.hessian == "exact":
        count = None
    return HessianStrategy(mode=config.hessian, sample_count=count, delta=config.delta, seed=config.seed,
                           lipschitz=sm.lipschitz_grad)


def execute(config: ExperimentConfig, problem: Optional[Problem] = None) -> IterateTrace:
    problem = problem or build_problem(config)
    oracle, x0 = problem.oracle, problem.x0
    sm = _smoothness(config, oracle)
    hs = _strategy(config, oracle, sm)
    monitor = error_monitor(problem.train, problem.test) if (config.errors and problem.train is not None) else None
    name = config.label
    if config.solver == "incr":
        cfg = IncrConfig(sm, hessian=hs, eta_policy=config.eta_policy, alpha_schedule=config.alpha_schedule,
                         mu_u=config.mu_u, R=config.R, max_iters=config.max_iters, grad_tol=config.grad_tol,
                         subproblem=config.subproblem)
        return run_incr(x0, oracle, cfg, monitor=monitor, name=name)
    if config.solver == "aincr":
        mu_u = config.mu_u if config.mu_u is not None else hs.nominal_mu(oracle)
        params = AincrParams.convex(sm.gamma, mu_u)
        return run_aincr(x0, oracle, params, hs, max_iters=config.max_iters, grad_tol=config.grad_tol,
                         subproblem=config.subproblem, monitor=monitor, name=name)
    if config.solver == "multistage":
        return run_multistage(x0, config.R0, oracle, sm, hs, grad_tol=config.grad_tol, max_iters=config.max_iters,
                              mu_u=config.mu_u, subproblem=config.subproblem, monitor=monitor, name=name)
    if sm.lipschitz_grad is None:
        raise ConfigurationError("first-order baselines need L")
    method = "cubic_gd" if config.solver == "cubic_gd" else "nesterov_ag"
    cfg = BaselineConfig(method, L=sm.lipschitz_grad, lam=sm.lam, max_iters=config.max_iters,
                         grad_tol=config.grad_tol)
    return run_baseline(x0, oracle, cfg, monitor=monitor, name=name)


def run_experiment(config: ExperimentConfig, problem: Optional[Problem] = None) -> IterateTrace:
    """Run and, when ``config.output`` is set, write the trace CSV there."""
    trace = execute(config, problem)
    if config.output is not None:
        out = Path(config.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        trace.to_csv(out)
    return trace


# -- comparison -------------------------------------------------------------

@dataclass(frozen=True)
class Reach:
    iters: Optional[int]
    seconds: Optional[float]


@dataclass
class ReportRow:
    solver: str
    reaches: List[Reach]
    rank: int = 0


def first_reach(trace: IterateTrace, level: float) -> Reach:
    f = trace.f
    hit = np.flatnonzero(f <= level)
    if hit.size == 0:
        return Reach(None, None)
    row = trace.rows[hit[0]]
    return Reach(row.t, row.time_s)


def compare(traces: Sequence[IterateTrace], thresholds: Sequence[float] = THRESHOLDS) -> List[ReportRow]:
    """Iterations and seconds for each trace to reach ``f <= f_best + tau``.

    ``f_best`` is the smallest f over all traces. Rows are ordered by
    iterations to the last threshold (unreached last); equal counts share a rank.
    """
    if len(traces) < 2:
        raise FormatError("compare needs at least two traces")
    finite = [np.nanmin(t.f) for t in traces if len(t)]
    if not finite:
        raise FormatError("all traces are empty")
    f_best = min(finite)
    rows = [ReportRow(t.solver, [first_reach(t, f_best + tau) for tau in thresholds]) for t in traces]

    def key(r):
        it = r.reaches[-1].iters
        return math.inf if it is None else it

    rows.sort(key=key)
    prev, rank = None, 0
    for pos, r in enumerate(rows, start=1):
        if key(r) != prev:
            rank, prev = pos, key(r)
        r.rank = rank
    return rows


def format_report(rows: Sequence[ReportRow], thresholds: Sequence[float] = THRESHOLDS) -> str:
    head = ["rank", "solver"]
    for tau in thresholds:
        head += [f"iters@{tau:g}", f"secs@{tau:g}"]
    lines = [",".join(head)]
    for r in rows:
        cells = [str(r.rank), r.solver]
        for reach in r.reaches:
            if reach.iters is None:
                cells += [UNREACHED, UNREACHED]
            else:
                cells += [str(reach.iters), f"{reach.seconds:.6g}"]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def iterations_to(traces: Sequence[IterateTrace], tau: float) -> Dict[str, float]:
    """Iterations to ``f_best + tau`` per solver, inf when unreached."""
    rows = compare(traces, (tau,))
    return {r.solver: (math.inf if r.reaches[0].iters is None else r.reaches[0].iters) for r in rows}
