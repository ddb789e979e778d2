"""Multi-stage AINCR: restart the convex-mode method with halving distance bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .aincr import AincrParams, run_aincr
from .errors import ConfigurationError
from .oracle import HessianStrategy, ObjectiveOracle, SmoothnessInfo
from .trace import IterateTrace, Recorder


@dataclass(frozen=True)
class StagePlan:
    s: int
    R_s: float
    T_s: int
    z_s: np.ndarray


def stage_length(gamma: float, R_prev: float, lam: float, mu_u: float) -> int:
    """ceil(2 max{(196 gamma R_prev/lam)^(1/3), 2 (6 mu_u/lam)^(1/2)}), at least 1."""
    if not lam > 0:
        raise ConfigurationError("stage length needs lam > 0")
    if gamma < 0 or mu_u < 0 or not R_prev > 0:
        raise ConfigurationError("need gamma >= 0, mu_u >= 0, R_prev > 0")
    raw = 2.0 * max((196.0 * gamma * R_prev / lam) ** (1.0 / 3.0), 2.0 * math.sqrt(6.0 * mu_u / lam))
    return max(1, math.ceil(raw))


def default_radius(z0, oracle: ObjectiveOracle, lam: float, x_star_bound: Optional[float] = None) -> float:
    """A valid R0: ||z0|| + ||x*|| bound when known, else ||grad f(z0)||/lam."""
    z0 = np.asarray(z0, dtype=float)
    if x_star_bound is not None:
        return float(np.linalg.norm(z0)) + float(x_star_bound)
    return float(np.linalg.norm(oracle.gradient(z0))) / lam


def run_multistage(
    z0,
    R0: Optional[float],
    oracle: ObjectiveOracle,
    smoothness: Optional[SmoothnessInfo] = None,
    hessian: Optional[HessianStrategy] = None,
    stages: Optional[int] = None,
    grad_tol: Optional[float] = None,
    max_iters: Optional[int] = None,
    mu_u: Optional[float] = None,
    early_exit: bool = False,
    x_star_bound: Optional[float] = None,
    subproblem: str = "exact",
    subproblem_tol: float = 1e-10,
    lanczos_threshold: int = 200,
    keep_iterates: bool = False,
    monitor=None,
    name: str = "multistage",
    max_stages: int = 200,
) -> IterateTrace:
    """Run stages s = 1, 2, ... of ``stage_length`` AINCR iterations each.

    Stops after ``stages`` stages, once ``||grad f(z_s)|| <= grad_tol``, or
    when the total iteration count reaches ``max_iters``. With ``early_exit``
    a stage also ends as soon as its gradient drops below ``grad_tol``.
    ``trace.stage_ends`` lists a :class:`StagePlan` per completed stage.
    """
    smoothness = smoothness or oracle.smoothness
    hessian = hessian or HessianStrategy()
    lam, gamma = smoothness.lam, smoothness.gamma
    if not lam > 0:
        raise ConfigurationError("the multi-stage method needs lam > 0")
    if stages is None and grad_tol is None and max_iters is None:
        raise ConfigurationError("give stages, grad_tol or max_iters")
    if mu_u is None:
        mu_u = hessian.nominal_mu(oracle)
    z = np.array(z0, dtype=float)
    if R0 is None:
        R0 = default_radius(z, oracle, lam, x_star_bound)
    if not R0 > 0:
        raise ConfigurationError("R0 must be positive")
    params = AincrParams.convex(gamma, mu_u)

    rec = Recorder(name, keep_iterates=keep_iterates, monitor=monitor)
    trace = rec.trace
    t_total = 0
    R_prev = R0
    inner_tol = grad_tol if (early_exit and grad_tol is not None) else 0.0
    for s in range(1, (stages or max_stages) + 1):
        T_s = stage_length(gamma, R_prev, lam, mu_u)
        if max_iters is not None:
            T_s = min(T_s, max_iters - t_total)
        if trace.rows:
            trace.rows.pop()
            if trace.iterates is not None:
                trace.iterates.pop()
        trace = run_aincr(z, oracle, params, hessian, max_iters=T_s, grad_tol=inner_tol, subproblem=subproblem,
                           subproblem_tol=subproblem_tol, lanczos_threshold=lanczos_threshold,
                           recorder=rec, t_offset=t_total, draw_offset=t_total, stage=s)
        last = trace.rows[-1]
        t_total = last.t
        z = trace.x_final.copy()
        R_prev = R0 / 2.0**s
        trace.stage_ends.append(StagePlan(s=s, R_s=R_prev, T_s=T_s, z_s=z.copy()))
        if grad_tol is not None and last.grad_norm <= grad_tol:
            break
        if max_iters is not None and t_total >= max_iters:
            break
    return rec.finish(z)
