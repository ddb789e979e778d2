"""Acceptance suite: one test per criterion, each reported as PASS/FAIL in the terminal summary.

Runtime limits are part of the criteria and are asserted alongside the numerical checks.
"""

import io
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from cubicnewton.aincr import AincrParams, run_aincr
from cubicnewton.data import (
    MUSHROOM_SIZES,
    format_libsvm,
    logistic_toy,
    mushrooms_split,
    parse_libsvm,
    split_train_test,
    synthetic_mushrooms,
)
from cubicnewton.experiment import ExperimentConfig, Problem, execute, iterations_to
from cubicnewton.incr import IncrConfig, alpha_strong, run_incr
from cubicnewton.multistage import run_multistage
from cubicnewton.oracle import (
    HessianStrategy,
    LogisticProblem,
    QuadraticProblem,
    make_quadratic_problem,
    sample_indices,
    sample_size_bound,
)
from cubicnewton.subproblem import CubicModel, solve_exact, solve_lanczos

from oracles import brute_force_cubic, random_psd


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


@pytest.fixture(scope="module")
def convex_logistic():
    """m=500, n=20 logistic loss without the regulariser; x*, f* from a tight reference run."""
    P = LogisticProblem.from_dataset(logistic_toy(500, 20, seed=0, scale=3.0), lam=0.0)
    x0 = np.zeros(20)
    ref = run_incr(x0, P, IncrConfig(P.smoothness, max_iters=1000, grad_tol=1e-12))
    assert ref.rows[-1].grad_norm <= 1e-12
    return P, x0, ref.x_final, ref.f[-1]


# -- 1 -----------------------------------------------------------------------

@pytest.mark.criterion(1, "subproblem optimality")
def test_criterion_01_subproblem_optimality(record_property):
    rng = np.random.default_rng(20240101)
    worst_gap = worst_kkt = -math.inf
    worst_psd = math.inf
    with Clock() as clock:
        for k in range(200):
            n = 1 + k % 4
            H = random_psd(rng, n, scale=rng.uniform(0.1, 10.0))
            g = rng.standard_normal(n)
            g *= rng.uniform(0.0, 10.0) / np.linalg.norm(g)
            eta = rng.uniform(0.1, 10.0)
            sol = solve_exact(CubicModel(g, H, eta), tol=1e-12)
            worst_gap = max(worst_gap, -sol.model_decrease - brute_force_cubic(g, H, eta))
            worst_kkt = max(worst_kkt, sol.kkt_residual / max(1.0, np.linalg.norm(g)))
            worst_psd = min(worst_psd, sol.psd_certificate)
    record_property("max_gap", f"{worst_gap:.2e}")
    record_property("max_kkt", f"{worst_kkt:.2e}")
    assert worst_gap <= 1e-6
    assert worst_kkt <= 1e-10
    assert worst_psd >= -1e-10
    assert clock.elapsed < 30


# -- 2 -----------------------------------------------------------------------

@pytest.mark.criterion(2, "Lanczos equivalence")
def test_criterion_02_lanczos_equivalence(record_property):
    rng = np.random.default_rng(7)
    worst_value = 0.0
    worst_dim = 0
    with Clock() as clock:
        for _ in range(50):
            H = random_psd(rng, 20, scale=5.0)
            g = rng.standard_normal(20)
            model = CubicModel(g, H, rng.uniform(0.1, 10.0))
            a, b = solve_lanczos(model, max_dim=20, tol=1e-12), solve_exact(model, tol=1e-12)
            worst_value = max(worst_value, abs(a.model_decrease - b.model_decrease))
        for _ in range(50):
            H = random_psd(rng, 20, clusters=rng.uniform(0.1, 10.0, 3))
            g = rng.standard_normal(20)
            sol = solve_lanczos(CubicModel(g, H, rng.uniform(0.1, 10.0)), max_dim=6, tol=1e-8)
            assert not sol.approximate
            assert sol.kkt_residual <= 1e-8 * max(1.0, np.linalg.norm(g))
            worst_dim = max(worst_dim, sol.krylov_dim)
    record_property("max_value_diff", f"{worst_value:.2e}")
    record_property("max_krylov_dim", worst_dim)
    assert worst_value <= 1e-8
    assert worst_dim <= 6
    assert clock.elapsed < 30


# -- 3 -----------------------------------------------------------------------

@pytest.mark.criterion(3, "INCR monotone descent")
def test_criterion_03_descent(record_property):
    worst = -math.inf
    runs = 0
    for seed in range(8):
        P = LogisticProblem.from_dataset(logistic_toy(200, 10, seed, scale=2.0))
        x0 = np.random.default_rng(seed).standard_normal(10) * 2
        m = P.component_count
        strategies = [
            HessianStrategy(),
            HessianStrategy("shifted_a1", sample_count=m, delta=0.05),
            HessianStrategy("shifted_a4", sample_count=m, delta=0.05),
            HessianStrategy("scaled_identity"),
        ]
        for hs in strategies:
            tr = run_incr(x0, P, IncrConfig(P.smoothness, hessian=hs, max_iters=100, grad_tol=1e-10))
            worst = max(worst, float(np.max(np.diff(tr.f), initial=-math.inf)))
            runs += 1
    record_property("runs", runs)
    record_property("max_increase", f"{worst:.2e}")
    assert worst <= 1e-12


# -- 4 -----------------------------------------------------------------------

@pytest.mark.criterion(4, "convex INCR rate")
def test_criterion_04_convex_incr_rate(convex_logistic, record_property):
    with Clock() as clock:
        P, x0, xs, fs = convex_logistic
        tr = run_incr(x0, P, IncrConfig(P.smoothness, max_iters=200, grad_tol=1e-12, keep_iterates=True))
        R = max(np.linalg.norm(x - xs) for x in tr.iterates)
        t = np.arange(len(tr))
        bound = 3 * P.smoothness.gamma * R**3 / ((t + 1) * (t + 2))
        ratio = (tr.f - fs) / bound
    record_property("iterations", len(tr) - 1)
    record_property("max_ratio", f"{ratio.max():.3g}")
    assert np.all(tr.f - fs <= bound)
    assert clock.elapsed < 120


# -- 5 -----------------------------------------------------------------------

@pytest.mark.criterion(5, "strongly convex INCR rate")
def test_criterion_05_strong_incr_rate(record_property):
    violations = 0
    worst = 0.0
    for seed in range(6):
        data = logistic_toy(300, 8, seed, scale=2.0)
        P = LogisticProblem.from_dataset(data)  # lam = 1/m
        assert P.smoothness.lam == pytest.approx(1 / 300)
        ref = run_incr(np.zeros(8), P, IncrConfig(P.smoothness, max_iters=500, grad_tol=1e-12))
        xs, fs = ref.x_final, ref.f[-1]
        x0 = np.random.default_rng(seed).standard_normal(8) * 3
        for hs in (HessianStrategy(), HessianStrategy("shifted_a1", sample_count=300, delta=0.01)):
            cfg = IncrConfig(P.smoothness, hessian=hs, max_iters=100, grad_tol=1e-11, keep_iterates=True)
            tr = run_incr(x0, P, cfg)
            R = max(np.linalg.norm(x - xs) for x in tr.iterates)
            abar = alpha_strong(P.smoothness.lam, hs.nominal_mu(P), P.smoothness.gamma, R)
            t = np.arange(len(tr))
            bound = (1 - abar) ** t * (tr.f[0] - fs)
            gap = tr.f - fs
            violations += int(np.sum(gap > bound + 1e-12))
            worst = max(worst, float(np.max(gap[1:] / bound[1:])))
    record_property("violations", violations)
    record_property("max_ratio", f"{worst:.3g}")
    assert violations == 0


# -- 6 -----------------------------------------------------------------------

@pytest.mark.criterion(6, "AINCR convex rate and sandwich")
def test_criterion_06_aincr_rate_and_sandwich(convex_logistic, record_property):
    P, x0, xs, fs = convex_logistic
    params = AincrParams.convex(P.smoothness.gamma)
    tr = run_aincr(x0, P, params, max_iters=200, grad_tol=1e-12, keep_states=True)
    t = np.arange(1, len(tr))
    bound = 98 * P.smoothness.gamma * np.linalg.norm(x0 - xs) ** 3 / (t * (t + 1) * (t + 2))
    gaps = tr.f[1:] - fs
    sandwich = max(s.f / s.A_prev - s.phi_star for s in tr.snapshots)
    record_property("max_ratio", f"{np.max(gaps / bound):.3g}")
    record_property("max_sandwich_excess", f"{sandwich:.2e}")
    assert np.all(gaps <= bound)
    assert sandwich <= 1e-8


# -- 7 -----------------------------------------------------------------------

@pytest.mark.criterion(7, "multi-stage guarantees")
def test_criterion_07_multistage(record_property):
    rng = np.random.default_rng(11)
    n = 10
    B = rng.standard_normal((n, n))
    Q = B @ B.T / n + 0.1 * np.eye(n)
    P = make_quadratic_problem(Q, rng.standard_normal(n))
    xs = P.minimizer()
    fs = P.value(xs)
    z0 = xs + rng.standard_normal(n) * 4
    R0 = float(np.linalg.norm(z0 - xs))
    # One component, so the sample is the full Hessian; the A4 shift keeps the model inexact.
    hs = HessianStrategy("shifted_a4", sample_count=1, delta=0.05)
    with Clock() as clock:
        tr = run_multistage(z0, R0, P, hessian=hs, stages=5)
    dist = [np.linalg.norm(p.z_s - xs) ** 2 / (R0**2 / 2**p.s) for p in tr.stage_ends]
    gap = [(P.value(p.z_s) - fs) / (0.25**p.s * (P.value(z0) - fs)) for p in tr.stage_ends]
    record_property("stage_lengths", [p.T_s for p in tr.stage_ends])
    record_property("max_dist_ratio", f"{max(dist):.3g}")
    record_property("max_gap_ratio", f"{max(gap):.3g}")
    assert [p.s for p in tr.stage_ends] == [1, 2, 3, 4, 5]
    assert max(dist) <= 1.0 and max(gap) <= 1.0
    assert clock.elapsed < 60


# -- 8 -----------------------------------------------------------------------

@pytest.mark.criterion(8, "subsample concentration")
def test_criterion_08_concentration(record_property):
    m, n, delta, Lambda = 2000, 20, 0.5, 0.1
    rng = np.random.default_rng(3)
    Qs = np.empty((m, n, n))
    for i in range(m):
        A = rng.standard_normal((n, n))
        S = 0.5 * (A + A.T)
        Qs[i] = S / np.abs(np.linalg.eigvalsh(S)).max() * rng.uniform(0.2, 1.0)
    P = QuadraticProblem(Qs, np.zeros((m, n)))
    assert P.component_bound <= 1.0 + 1e-12
    k = sample_size_bound(P.component_bound, delta, Lambda, n)
    full = P.hessian(np.zeros(n))
    with Clock() as clock:
        x = np.zeros(n)
        errs = np.array([np.linalg.norm(P.subsample_hessian(sample_indices(m, k, 0, d), x) - full, 2)
                         for d in range(200)])
    freq = float(np.mean(errs <= delta))
    record_property("sample_size", k)
    record_property("success_rate", f"{freq:.3f}")
    assert freq >= 1 - Lambda
    assert clock.elapsed < 120


# -- 9 and 10 ----------------------------------------------------------------

def _mushrooms():
    path = os.environ.get("CUBICNEWTON_MUSHROOMS")
    if path and Path(path).is_file():
        data = parse_libsvm(path)
        return split_train_test(data, MUSHROOM_SIZES[1] / len(data), seed=0)
    return mushrooms_split(0)


@pytest.fixture(scope="module")
def mushrooms_runs():
    train, test = _mushrooms()
    oracle = LogisticProblem.from_dataset(train)  # lam = 1/m, default gamma
    problem = Problem(oracle, np.zeros(oracle.n), train, test)
    common = dict(errors=False, grad_tol=1e-11)
    configs = {
        "incr": ExperimentConfig(solver="incr", hessian="shifted_a1", sample_fraction=0.005, delta=0.01,
                                 max_iters=3000, **common),
        "aincr": ExperimentConfig(solver="aincr", max_iters=3000, **common),
        "ag": ExperimentConfig(solver="ag", max_iters=6000, **common),
        "cubic_gd": ExperimentConfig(solver="cubic_gd", max_iters=6000, **common),
    }
    start = time.perf_counter()
    traces = {name: execute(cfg, problem) for name, cfg in configs.items()}
    elapsed = time.perf_counter() - start
    return problem, traces, elapsed


@pytest.mark.criterion(9, "Mushrooms-like iteration ordering")
def test_criterion_09_ordering(mushrooms_runs, record_property):
    _, traces, elapsed = mushrooms_runs
    its = iterations_to(list(traces.values()), 1e-8)
    record_property("iterations", {k: its[k] for k in ("aincr", "incr", "ag", "cubic_gd")})
    record_property("seconds", f"{elapsed:.0f}")
    assert elapsed < 600
    assert its["incr"] < its["ag"] < its["cubic_gd"]
    assert its["aincr"] <= its["incr"]


@pytest.mark.criterion(10, "subsample-size insensitivity")
def test_criterion_10_subsample_sizes(mushrooms_runs, record_property):
    problem, traces, _ = mushrooms_runs
    f_best = min(float(np.min(t.f)) for t in traces.values())
    counts = {}
    for frac in (0.005, 0.025, 0.125):
        cfg = ExperimentConfig(solver="incr", hessian="shifted_a1", sample_fraction=frac, delta=0.01,
                               max_iters=3000, grad_tol=1e-10, errors=False)
        tr = execute(cfg, problem)
        hit = np.flatnonzero(tr.f <= f_best + 1e-6)
        counts[frac] = int(tr.rows[hit[0]].t) if hit.size else math.inf
    record_property("iterations", counts)
    assert all(math.isfinite(c) for c in counts.values())
    assert max(counts.values()) <= 2 * min(counts.values())


# -- 11 ----------------------------------------------------------------------

@pytest.mark.criterion(11, "oracle finite differences and LIBSVM round trip")
def test_criterion_11_oracle_and_roundtrip(record_property):
    P = LogisticProblem.from_dataset(logistic_toy(60, 6, 2, scale=2.0))
    rng = np.random.default_rng(0)
    worst_g = worst_h = 0.0
    for _ in range(50):
        x = rng.standard_normal(6) * 2
        eps = 1e-6
        E = np.eye(6)
        fd_g = np.array([(P.value(x + eps * e) - P.value(x - eps * e)) / (2 * eps) for e in E])
        g = P.gradient(x)
        worst_g = max(worst_g, np.linalg.norm(fd_g - g) / max(np.linalg.norm(g), 1e-12))
        h = 1e-5
        fd_H = np.array([(P.gradient(x + h * e) - P.gradient(x - h * e)) / (2 * h) for e in E])
        H = P.hessian(x)
        worst_h = max(worst_h, np.linalg.norm(fd_H - H) / max(np.linalg.norm(H), 1e-12))
    record_property("grad_rel", f"{worst_g:.1e}")
    record_property("hess_rel", f"{worst_h:.1e}")
    assert worst_g <= 1e-6
    assert worst_h <= 1e-4
    for ds in (synthetic_mushrooms(1, m=300), logistic_toy(100, 7, 5, density=0.4)):
        again = parse_libsvm(io.StringIO(format_libsvm(ds)), dim=ds.dim)
        assert again.samples == ds.samples and again.dim == ds.dim
