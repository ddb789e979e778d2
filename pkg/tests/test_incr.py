import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cubicnewton.data import logistic_toy
from cubicnewton.errors import ConfigurationError
from cubicnewton.incr import (
    ETA_FLOOR,
    IncrConfig,
    alpha_convex,
    alpha_strong,
    eta_schedule,
    incr_step,
    run_incr,
)
from cubicnewton.oracle import HessianStrategy, LogisticProblem, SmoothnessInfo, make_quadratic_problem
from cubicnewton.subproblem import CubicModel, solve_exact


def toy_logistic(m=4, n=2, seed=0, lam=None, scale=1.0):
    return LogisticProblem.from_dataset(logistic_toy(m, n, seed, scale=scale), lam=lam)


# -- schedules ---------------------------------------------------------------

def test_alpha_strong_examples():
    assert alpha_strong(1.0, 0.5, 1.0, 2.0) == pytest.approx(1 / 3)
    assert alpha_strong(2.0, 0.0, 1.0, 1.0) == pytest.approx(1 / 3)
    assert alpha_strong(0.01, 1.0, 1.0, 100.0) == pytest.approx(0.01 / 6, rel=1e-12)


def test_alpha_strong_needs_strong_convexity():
    with pytest.raises(ConfigurationError):
        alpha_strong(0.0, 1.0, 1.0, 1.0)


@pytest.mark.parametrize("t,expected", [(0, 1.0), (3, 0.5), (9, 0.25)])
def test_alpha_convex(t, expected):
    assert alpha_convex(t) == expected


def test_eta_fixed_and_adaptive():
    sm = SmoothnessInfo(lam=0.0, gamma=1.0)
    fixed = IncrConfig(sm)
    assert all(eta_schedule(t, fixed) == 1.0 for t in range(5))
    adaptive = IncrConfig(sm, eta_policy="adaptive", mu_u=0.5, R=3.0)
    assert eta_schedule(0, adaptive) == pytest.approx(1 + 1 / 3)
    zero = IncrConfig(sm, eta_policy="adaptive", mu_u=0.0, R=3.0)
    assert eta_schedule(7, zero) == 1.0


def test_eta_floor_for_quadratics():
    cfg = IncrConfig(SmoothnessInfo(lam=1.0, gamma=0.0))
    assert eta_schedule(0, cfg) == ETA_FLOOR


@pytest.mark.parametrize(
    "kwargs",
    [dict(eta_policy="other"), dict(alpha_schedule="x"), dict(grad_tol=0.0), dict(eta_policy="adaptive", R=0.0),
     dict(eta_policy="adaptive", mu_u=-1.0), dict(subproblem="cg")],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        IncrConfig(SmoothnessInfo(gamma=1.0), **kwargs)


# -- steps -------------------------------------------------------------------

def test_quadratic_newton_step():
    P = make_quadratic_problem(np.eye(2), np.zeros(2))
    x1, info = incr_step(np.array([2.0, -1.0]), P, IncrConfig(P.smoothness), 0)
    np.testing.assert_allclose(x1, 0.0, atol=1e-9)
    assert info.mu_t == 0.0 and info.eta == ETA_FLOOR


def test_stationary_point_does_not_move():
    P = make_quadratic_problem(np.diag([1.0, 2.0]), np.array([1.0, 2.0]))
    x, _ = incr_step(np.array([1.0, 1.0]), P, IncrConfig(P.smoothness), 0)
    np.testing.assert_array_equal(x, [1.0, 1.0])


def test_logistic_toy_strict_descent():
    P = toy_logistic()
    x0 = np.array([1.0, -2.0])
    x1, _ = incr_step(x0, P, IncrConfig(P.smoothness), 0)
    assert P.value(x1) < P.value(x0)


def test_lanczos_path_matches_exact():
    P = toy_logistic(40, 8, 3)
    x0 = np.ones(8)
    a, _ = incr_step(x0, P, IncrConfig(P.smoothness), 0)
    b, info = incr_step(x0, P, IncrConfig(P.smoothness, subproblem="auto", lanczos_threshold=4), 0)
    np.testing.assert_allclose(a, b, atol=1e-9)
    assert info.krylov_dim is not None


# -- runs --------------------------------------------------------------------

def test_run_from_stationary_point():
    P = make_quadratic_problem(np.eye(2), np.zeros(2))
    tr = run_incr(np.zeros(2), P, IncrConfig(P.smoothness))
    assert len(tr) == 1 and tr.rows[0].grad_norm == 0.0
    assert math.isnan(tr.rows[0].step_norm)


def test_quadratic_converges_in_two_iterations():
    rng = np.random.default_rng(2)
    B = rng.standard_normal((5, 5))
    P = make_quadratic_problem(B @ B.T + np.eye(5), rng.standard_normal(5))
    tr = run_incr(rng.standard_normal(5), P, IncrConfig(P.smoothness, grad_tol=1e-8))
    assert tr.rows[-1].grad_norm <= 1e-8
    assert tr.rows[-1].t <= 2


def test_trace_rows_and_diagnostics():
    P = toy_logistic(30, 3, 1)
    tr = run_incr(np.zeros(3), P, IncrConfig(P.smoothness, max_iters=4, grad_tol=1e-14))
    assert [r.t for r in tr.rows] == list(range(5))
    assert len(tr.diagnostics) == 4
    assert all(r.eta == P.smoothness.gamma for r in tr.rows[:-1])
    assert tr.x_final is not None
    times = tr.column("time_s")
    assert np.all(np.diff(times) >= 0)


def test_rate_bound_logistic_convex():
    data = logistic_toy(500, 20, seed=0, scale=3.0)
    P = LogisticProblem.from_dataset(data, lam=0.0)
    x0 = np.zeros(20)
    ref = run_incr(x0, P, IncrConfig(P.smoothness, max_iters=500, grad_tol=1e-12))
    xs, fs = ref.x_final, ref.f[-1]
    tr = run_incr(x0, P, IncrConfig(P.smoothness, max_iters=60, grad_tol=1e-12, keep_iterates=True))
    R = max(np.linalg.norm(x - xs) for x in tr.iterates)
    t = np.arange(len(tr))
    assert np.all(tr.f - fs <= 3 * P.smoothness.gamma * R**3 / ((t + 1) * (t + 2)) + 1e-12)


def _delta_H(H, hess_t, x, x_next, x_t):
    a, b, c = x - x_next, x_next - x_t, x - x_t
    return -0.5 * (a @ H @ a + b @ (H - hess_t) @ b + c @ (hess_t - H) @ c)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["exact", "shifted_a1", "raw"]), st.floats(0.5, 4.0))
def test_one_step_recursion_holds_at_minimiser(seed, mode, eta_scale):
    P = toy_logistic(20, 3, seed, lam=0.05)
    gamma = P.smoothness.gamma
    strategy = HessianStrategy(mode) if mode == "exact" else HessianStrategy(mode, sample_count=5, delta=0.1, seed=seed)
    ref = run_incr(np.zeros(3), P, IncrConfig(P.smoothness, grad_tol=1e-12, max_iters=200))
    xs = ref.x_final
    rng = np.random.default_rng(seed)
    x_t = xs + rng.standard_normal(3)
    from cubicnewton.oracle import subsampled_hessian

    H, _ = subsampled_hessian(P, x_t, strategy, draw=0)
    eta = eta_scale * gamma
    x_next = x_t + solve_exact(CubicModel(P.gradient(x_t), H, eta)).step
    lhs = P.value(x_next)
    rhs = (P.value(xs) + _delta_H(H, P.hessian(x_t), xs, x_next, x_t)
           - eta / 12 * np.linalg.norm(xs - x_next) ** 3
           + (gamma + eta) / 6 * np.linalg.norm(xs - x_t) ** 3
           + (gamma - eta) / 6 * np.linalg.norm(x_next - x_t) ** 3)
    assert lhs <= rhs + 1e-8


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["exact", "full_a1", "scaled_identity"]))
def test_descent_with_compliant_hessians(seed, mode):
    P = toy_logistic(40, 4, seed, scale=2.0)
    if mode == "exact":
        hs = HessianStrategy()
    elif mode == "full_a1":
        hs = HessianStrategy("shifted_a1", sample_count=40, delta=0.05)
    else:
        hs = HessianStrategy("scaled_identity")
    x0 = np.random.default_rng(seed).standard_normal(4) * 3
    tr = run_incr(x0, P, IncrConfig(P.smoothness, hessian=hs, max_iters=40, grad_tol=1e-10))
    assert np.all(np.diff(tr.f) <= 1e-12)
