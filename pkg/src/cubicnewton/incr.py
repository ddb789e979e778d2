"""Inexact Newton method with cubic regularization (INCR)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .oracle import HessianStrategy, ObjectiveOracle, SmoothnessInfo, subsampled_hessian
from .subproblem import CubicModel, solve_exact, solve_lanczos
from .trace import IterateTrace, Recorder

# Keeps the cubic model well posed when gamma = 0 (quadratic fixtures).
ETA_FLOOR = 1e-12

SUBPROBLEM_SOLVERS = ("exact", "lanczos", "auto")


@dataclass(frozen=True)
class IncrConfig:
    """INCR settings.

    ``eta_policy`` is ``"fixed"`` (eta_t = gamma) or ``"adaptive"``
    (eta_t = gamma + 2 mu_u / (alpha_t R)). ``mu_u`` defaults to the Hessian
    strategy's nominal error. ``subproblem="auto"`` switches to the Lanczos
    solver when the dimension exceeds ``lanczos_threshold``.
    """

    smoothness: SmoothnessInfo
    hessian: HessianStrategy = field(default_factory=HessianStrategy)
    eta_policy: str = "fixed"
    alpha_schedule: str = "convex"
    mu_u: Optional[float] = None
    R: float = 1e6
    max_iters: int = 1000
    grad_tol: float = 1e-8
    subproblem: str = "exact"
    subproblem_tol: float = 1e-10
    lanczos_threshold: int = 200
    lanczos_max_dim: Optional[int] = None
    keep_iterates: bool = False

    def __post_init__(self):
        if self.eta_policy not in ("fixed", "adaptive"):
            raise ConfigurationError(f"unknown eta policy {self.eta_policy!r}")
        if self.alpha_schedule not in ("convex", "strong"):
            raise ConfigurationError(f"unknown alpha schedule {self.alpha_schedule!r}")
        if self.eta_policy == "adaptive":
            if self.mu_u is not None and self.mu_u < 0:
                raise ConfigurationError("mu_u must be nonnegative")
            if not self.R > 0:
                raise ConfigurationError("R must be positive")
        if not self.grad_tol > 0:
            raise ConfigurationError("grad_tol must be positive")
        if self.max_iters < 0:
            raise ConfigurationError("max_iters must be nonnegative")
        if self.subproblem not in SUBPROBLEM_SOLVERS:
            raise ConfigurationError(f"unknown subproblem solver {self.subproblem!r}")


@dataclass(frozen=True)
class StepInfo:
    mu_t: float
    eta: float
    step_norm: float
    kkt_residual: float
    approximate: bool = False
    krylov_dim: Optional[int] = None


def alpha_strong(lam: float, mu_u: float, gamma: float, R: float) -> float:
    """min{1/3, lam/(6 mu_u), sqrt(2 lam/(gamma R))}; vanishing denominators drop their term."""
    if not lam > 0:
        raise ConfigurationError("the strong schedule needs lam > 0")
    if mu_u < 0 or gamma < 0 or not R > 0:
        raise ConfigurationError("need mu_u >= 0, gamma >= 0, R > 0")
    terms = [1.0 / 3.0]
    if mu_u > 0:
        terms.append(lam / (6.0 * mu_u))
    if gamma > 0:
        terms.append(math.sqrt(2.0 * lam / (gamma * R)))
    return min(terms)


def alpha_convex(t: int) -> float:
    return 3.0 / (t + 3.0)


def resolve_mu_u(config: IncrConfig, oracle: Optional[ObjectiveOracle] = None) -> float:
    if config.mu_u is not None:
        return float(config.mu_u)
    return config.hessian.nominal_mu(oracle)


def eta_schedule(t: int, config: IncrConfig, mu_u: Optional[float] = None) -> float:
    gamma = config.smoothness.gamma
    if config.eta_policy == "fixed":
        return max(gamma, ETA_FLOOR)
    if mu_u is None:
        mu_u = resolve_mu_u(config)
    if config.alpha_schedule == "convex":
        alpha = alpha_convex(t)
    else:
        alpha = alpha_strong(config.smoothness.lam, mu_u, gamma, config.R)
    return max(gamma + 2.0 * mu_u / (alpha * config.R), ETA_FLOOR)


def solve_model(model: CubicModel, method="exact", tol=1e-10, lanczos_threshold=200, max_dim=None):
    if method == "lanczos" or (method == "auto" and model.n > lanczos_threshold):
        return solve_lanczos(model, max_dim=max_dim, tol=tol)
    return solve_exact(model, tol=tol)


def incr_step(x, oracle: ObjectiveOracle, config: IncrConfig, t: int, g=None, mu_u=None):
    """One INCR iteration from ``x``; returns ``(x_next, StepInfo)``."""
    x = np.asarray(x, dtype=float)
    if g is None:
        g = oracle.gradient(x)
    H, mu_t = subsampled_hessian(oracle, x, config.hessian, draw=t)
    if mu_u is None and config.eta_policy == "adaptive":
        mu_u = resolve_mu_u(config, oracle)
    eta = eta_schedule(t, config, mu_u)
    sol = solve_model(CubicModel(g, H, eta, anchor=x), config.subproblem, config.subproblem_tol,
                      config.lanczos_threshold, config.lanczos_max_dim)
    info = StepInfo(mu_t=mu_t, eta=eta, step_norm=sol.step_norm, kkt_residual=sol.kkt_residual,
                    approximate=sol.approximate, krylov_dim=sol.krylov_dim)
    return x + sol.step, info


def run_incr(x0, oracle: ObjectiveOracle, config: IncrConfig, monitor=None, name="incr") -> IterateTrace:
    """Iterate until ``||grad f(x_t)|| <= grad_tol`` or ``t = max_iters``."""
    x = np.array(x0, dtype=float)
    mu_u = resolve_mu_u(config, oracle) if config.eta_policy == "adaptive" else None
    rec = Recorder(name, keep_iterates=config.keep_iterates, monitor=monitor)
    for t in range(config.max_iters + 1):
        f = oracle.value(x)
        g = oracle.gradient(x)
        gn = float(np.linalg.norm(g))
        if gn <= config.grad_tol or t == config.max_iters:
            rec.add(t, x, f, gn)
            break
        x_next, info = incr_step(x, oracle, config, t, g=g, mu_u=mu_u)
        rec.add(t, x, f, gn, eta=info.eta, step_norm=info.step_norm, mu_t=info.mu_t)
        rec.trace.diagnostics.append(info)
        x = x_next
    return rec.finish(x)
