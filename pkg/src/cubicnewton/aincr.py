"""Accelerated inexact Newton method with cubic regularization (AINCR).

The method keeps three points per iteration: ``w_t`` (where the cubic model
is built), ``x_{t+1}`` (its minimiser) and ``y_{t+1}`` (minimiser of the
estimate function ``phi_{t+1}``). ``phi`` is stored in closed form around
``x0``::

    phi_{t+1}(x) = f(x_1) + s0 + <v_t, d> + (b_t/2)||d||^2 + (beta/6)||d||^3,   d = x - x0

with ``b_t = mu_bar_t + lam (1/A_t - 1)``, so ``y_{t+1}`` has a closed form.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .errors import ConfigurationError
from .incr import ETA_FLOOR, StepInfo, alpha_convex, solve_model
from .oracle import HessianStrategy, ObjectiveOracle, subsampled_hessian
from .subproblem import CubicModel
from .trace import IterateTrace, Recorder

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AincrParams:
    """Parameter set; build with :meth:`convex` or :meth:`strong`."""

    mode: str
    beta: float
    eta: float
    gamma: float
    lam: float = 0.0
    mu_u: float = 0.0
    alpha_hat: Optional[float] = None
    R_bar: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("convex", "strong"):
            raise ConfigurationError(f"unknown AINCR mode {self.mode!r}")
        if not (self.beta > 0 and self.eta > 0):
            raise ConfigurationError("beta and eta must be positive")
        if self.lam < 0 or self.mu_u < 0 or self.gamma < 0:
            raise ConfigurationError("lam, mu_u, gamma must be nonnegative")
        if self.mode == "strong" and not (self.alpha_hat is not None and 0 < self.alpha_hat < 1):
            raise ConfigurationError("strong mode needs alpha_hat in (0, 1)")

    @classmethod
    def convex(cls, gamma: float, mu_u: float = 0.0) -> "AincrParams":
        """alpha_t = 3/(t+3), mu_bar_t = 2 mu_u (t+2), beta = 96 gamma, eta = 4 gamma, lam = 0."""
        return cls("convex", beta=max(96.0 * gamma, ETA_FLOOR), eta=max(4.0 * gamma, ETA_FLOOR),
                   gamma=gamma, lam=0.0, mu_u=mu_u)

    @classmethod
    def strong(cls, lam: float, gamma: float, mu_u: float, R_bar: float) -> "AincrParams":
        """Constant alpha_hat, mu_bar_t = lam/4, beta = 3 lam/(2 R_bar), eta = 4 gamma.

        ``R_bar`` must bound every R_t; the multi-stage method avoids needing it.
        """
        if not lam > 0 or not R_bar > 0:
            raise ConfigurationError("strong mode needs lam > 0 and R_bar > 0")
        terms = [8.0 / 9.0]
        if mu_u > 0:
            terms.append(math.sqrt(lam / (18.0 * math.sqrt(3.0) * mu_u)))
        if gamma > 0:
            terms.append(0.25 * (lam / (gamma * R_bar)) ** (1.0 / 3.0))
        return cls("strong", beta=1.5 * lam / R_bar, eta=max(4.0 * gamma, ETA_FLOOR), gamma=gamma,
                   lam=lam, mu_u=mu_u, alpha_hat=min(terms), R_bar=R_bar)

    def alpha(self, t: int) -> float:
        if t == 0:
            return 1.0
        return alpha_convex(t) if self.mode == "convex" else self.alpha_hat

    def mu_bar(self, t: int) -> float:
        if self.mode == "convex":
            return 2.0 * self.mu_u * (t + 2)
        return 0.25 * self.lam


def a_sequence(t: int, schedule: Union[str, float] = "convex") -> float:
    """A_0 = 1, A_t = prod_{i=1..t} (1 - alpha_i); ``schedule`` is "convex" or a constant alpha."""
    A = 1.0
    for i in range(1, t + 1):
        A *= 1.0 - (alpha_convex(i) if schedule == "convex" else float(schedule))
    return A


def w_update(x, y, alpha: float):
    if not 0 < alpha <= 1:
        raise ConfigurationError("alpha must lie in (0, 1]")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if alpha == 1.0:
        return y.copy()
    return x + alpha * (y - x)


def y_update(x0, v, b: float, beta: float):
    """Minimiser of <v, d> + (b/2)||d||^2 + (beta/6)||d||^3 over d = y - x0."""
    if b < 0:
        raise AssertionError(f"negative quadratic coefficient {b}")
    x0 = np.asarray(x0, dtype=float)
    v = np.asarray(v, dtype=float)
    vn = float(np.linalg.norm(v))
    if vn == 0.0:
        return x0.copy()
    return x0 - 2.0 * v / (b + math.sqrt(b * b + 2.0 * beta * vn))


@dataclass
class ConditionReport:
    t: int
    lhs1: float
    rhs1: float
    lhs2: float
    rhs2: float

    @property
    def first(self):
        return self.lhs1 <= self.rhs1

    @property
    def second(self):
        return self.lhs2 <= self.rhs2

    @property
    def ok(self):
        return self.first and self.second


def check_conditions(t, alpha, A_prev, A_t, mu_bar_prev, mu_t, grad_next_norm, params: AincrParams):
    """Sufficient conditions for ``f(x_{t+1})/A_t <= phi_{t+1}^*``.

    ``alpha^2/A_t <= (2 mu_bar_{t-1} + lam_bar_t)/(sqrt 3 mu_t)`` and
    ``alpha^3/A_t <= 9 (beta + 3 lam_bar_t / R_t) / (32 (2 gamma + eta))`` with
    ``lam_bar_t = (lam/2)(1/A_{t-1} - 1)`` and
    ``R_t = alpha ||grad f(x_{t+1})|| / (A_t (mu_bar_{t-1} + lam_bar_t))``.
    """
    lam_bar = 0.5 * params.lam * (1.0 / A_prev - 1.0)
    lhs1 = alpha**2 / A_t
    rhs1 = math.inf if mu_t == 0 else (2.0 * mu_bar_prev + lam_bar) / (math.sqrt(3.0) * mu_t)
    denom = mu_bar_prev + lam_bar
    R_t = math.inf if denom == 0 else alpha * grad_next_norm / (A_t * denom)
    if lam_bar == 0:
        extra = 0.0
    elif R_t == 0:
        extra = math.inf
    else:
        extra = 3.0 * lam_bar / R_t
    lhs2 = alpha**3 / A_t
    rhs2 = 9.0 * (params.beta + extra) / (32.0 * (2.0 * params.gamma + params.eta))
    return ConditionReport(t, lhs1, rhs1, lhs2, rhs2)


@dataclass
class AincrState:
    """Iteration ``t`` holds x_t, y_t, A_{t-1} and the phi_t accumulators."""

    t: int
    x0: np.ndarray
    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    A: float
    v: np.ndarray
    s0: float
    f1: float
    grad_x: np.ndarray
    alpha_sum: float = 0.0
    last_step: Optional[StepInfo] = None
    last_conditions: Optional[ConditionReport] = None

    def phi(self, x, params: AincrParams) -> float:
        d = np.asarray(x, dtype=float) - self.x0
        dn = float(np.linalg.norm(d))
        b = params.mu_bar(self.t - 1) + params.lam * self.alpha_sum
        return self.f1 + self.s0 + float(self.v @ d) + 0.5 * b * dn * dn + params.beta / 6.0 * dn**3

    def phi_star(self, params: AincrParams) -> float:
        return self.phi(self.y, params)


@dataclass(frozen=True)
class Snapshot:
    """``f(x_t)``, ``A_{t-1}``, ``phi_t^*`` and a frozen copy of the state (for ``phi_t(x)``)."""

    t: int
    f: float
    A_prev: float
    phi_star: float
    state: AincrState


@dataclass(frozen=True)
class _SolverOpts:
    method: str = "exact"
    tol: float = 1e-10
    lanczos_threshold: int = 200
    max_dim: Optional[int] = None


def _model_step(oracle, point, strategy, eta, draw, opts):
    g = oracle.gradient(point)
    H, mu_t = subsampled_hessian(oracle, point, strategy, draw=draw)
    sol = solve_model(CubicModel(g, H, eta, anchor=point), opts.method, opts.tol,
                      opts.lanczos_threshold, opts.max_dim)
    return point + sol.step, sol, mu_t


def aincr_init(x0, oracle: ObjectiveOracle, params: AincrParams, hessian: HessianStrategy = None,
               draw: int = 0, opts: _SolverOpts = _SolverOpts()) -> AincrState:
    """x_1 minimises the cubic model at x0 with eta = gamma; y_1 = w_0 = x0."""
    hessian = hessian or HessianStrategy()
    x0 = np.array(x0, dtype=float)
    eta0 = max(params.gamma, ETA_FLOOR)
    x1, sol, mu0 = _model_step(oracle, x0, hessian, eta0, draw, opts)
    state = AincrState(t=1, x0=x0, x=x1, y=x0.copy(), w=x0.copy(), A=1.0, v=np.zeros_like(x0),
                       s0=0.0, f1=oracle.value(x1), grad_x=oracle.gradient(x1))
    state.last_step = StepInfo(mu_t=mu0, eta=eta0, step_norm=sol.step_norm, kkt_residual=sol.kkt_residual,
                               approximate=sol.approximate, krylov_dim=sol.krylov_dim)
    return state


def aincr_iterate(state: AincrState, oracle: ObjectiveOracle, params: AincrParams,
                  hessian: HessianStrategy = None, draw: Optional[int] = None,
                  opts: _SolverOpts = _SolverOpts()) -> AincrState:
    """Advance from iteration t to t+1 (mutates and returns ``state``)."""
    hessian = hessian or HessianStrategy()
    t = state.t
    alpha = params.alpha(t)
    w = w_update(state.x, state.y, alpha)
    x_next, sol, mu_t = _model_step(oracle, w, hessian, params.eta, t if draw is None else draw, opts)
    g_next = oracle.gradient(x_next)
    f_next = oracle.value(x_next)

    A_prev = state.A
    A_t = (1.0 - alpha) * A_prev
    c = alpha / A_t
    d_next = x_next - state.x0
    lam = params.lam
    state.s0 += c * (f_next - float(g_next @ d_next) + 0.5 * lam * float(d_next @ d_next))
    state.v = state.v + c * (g_next - lam * d_next)
    state.alpha_sum += c

    report = check_conditions(t, alpha, A_prev, A_t, params.mu_bar(t - 1), mu_t,
                              float(np.linalg.norm(g_next)), params)
    if not report.ok:
        log.debug("AINCR conditions fail at t=%d: %.3g<=%.3g %.3g<=%.3g",
                    t, report.lhs1, report.rhs1, report.lhs2, report.rhs2)

    b = params.mu_bar(t) + lam * (1.0 / A_t - 1.0)
    state.last_step = StepInfo(mu_t=mu_t, eta=params.eta, step_norm=float(np.linalg.norm(x_next - state.x)),
                               kkt_residual=sol.kkt_residual, approximate=sol.approximate,
                               krylov_dim=sol.krylov_dim)
    state.last_conditions = report
    state.y = y_update(state.x0, state.v, b, params.beta)
    state.w = w
    state.x = x_next
    state.grad_x = g_next
    state.A = A_t
    state.t = t + 1
    return state


def run_aincr(x0, oracle: ObjectiveOracle, params: AincrParams, hessian: HessianStrategy = None,
              max_iters: int = 1000, grad_tol: float = 1e-8, subproblem: str = "exact",
              subproblem_tol: float = 1e-10, lanczos_threshold: int = 200, lanczos_max_dim=None,
              keep_iterates: bool = False, monitor=None, name: str = "aincr",
              recorder: Optional[Recorder] = None, t_offset: int = 0, draw_offset: int = 0,
              stage: Optional[int] = None, keep_states: bool = False) -> IterateTrace:
    """Run until ``||grad f(x_t)|| <= grad_tol`` or ``t = max_iters``; the last row is x_{max_iters}.

    ``recorder``/``t_offset``/``draw_offset``/``stage`` let the multi-stage
    driver append several runs to one trace. ``diagnostics`` collects the
    per-iteration :class:`ConditionReport`; with ``keep_states`` the trace's
    ``snapshots`` also hold a :class:`Snapshot` per iterate. ``x_final`` is
    always the last iterate of this run, even on a shared recorder.
    """
    hessian = hessian or HessianStrategy()
    opts = _SolverOpts(subproblem, subproblem_tol, lanczos_threshold, lanczos_max_dim)
    rec = recorder or Recorder(name, keep_iterates=keep_iterates, monitor=monitor)
    x0 = np.array(x0, dtype=float)
    f0 = oracle.value(x0)
    g0n = float(np.linalg.norm(oracle.gradient(x0)))
    if g0n <= grad_tol or max_iters == 0:
        rec.add(t_offset, x0, f0, g0n, stage=stage)
        return rec.finish(x0)

    state = aincr_init(x0, oracle, params, hessian, draw=draw_offset, opts=opts)
    s = state.last_step
    rec.add(t_offset, x0, f0, g0n, stage=stage, eta=s.eta, step_norm=s.step_norm, mu_t=s.mu_t)
    failed = 0
    while True:
        t = state.t
        x_t = state.x
        fx = oracle.value(x_t)
        gn = float(np.linalg.norm(state.grad_x))
        if keep_states:
            rec.trace.snapshots.append(Snapshot(t, fx, state.A, state.phi_star(params), replace(state)))
        if gn <= grad_tol or t >= max_iters:
            rec.add(t_offset + t, x_t, fx, gn, stage=stage)
            break
        aincr_iterate(state, oracle, params, hessian, draw=draw_offset + t, opts=opts)
        s = state.last_step
        rec.add(t_offset + t, x_t, fx, gn, stage=stage, eta=s.eta, step_norm=s.step_norm, mu_t=s.mu_t)
        rec.trace.diagnostics.append(state.last_conditions)
        failed += not state.last_conditions.ok
    if failed:
        log.warning("%s: step conditions failed on %d of %d iterations", rec.trace.solver, failed, state.t - 1)
    return rec.finish(state.x)
