"""First-order competitors: Cubic-GD (cubic model with H = L I) and Nesterov's accelerated gradient."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .incr import ETA_FLOOR
from .oracle import ObjectiveOracle
from .trace import IterateTrace, Recorder

METHODS = ("cubic_gd", "nesterov_ag")


@dataclass(frozen=True)
class BaselineConfig:
    """Settings shared by both baselines.

    ``eta`` is only read by Cubic-GD (None means the oracle's gamma, floored).
    ``momentum`` picks the AG variant; None chooses ``"strong"`` when lam > 0.
    """

    method: str
    L: float
    lam: float = 0.0
    eta: Optional[float] = None
    max_iters: int = 1000
    grad_tol: float = 1e-8
    momentum: Optional[str] = None
    keep_iterates: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown baseline {self.method!r}")
        if not self.L > 0:
            raise ConfigurationError("L must be positive")
        if self.lam < 0 or self.lam > self.L * (1 + 1e-12):
            raise ConfigurationError("need 0 <= lam <= L")
        if self.eta is not None and not self.eta > 0:
            raise ConfigurationError("eta must be positive")
        if self.momentum not in (None, "convex", "strong"):
            raise ConfigurationError(f"unknown momentum {self.momentum!r}")
        if self.momentum == "strong" and not self.lam > 0:
            raise ConfigurationError("strong momentum needs lam > 0")
        if not self.grad_tol > 0 or self.max_iters < 0:
            raise ConfigurationError("need grad_tol > 0 and max_iters >= 0")


def cubic_gd_step(x, g, L: float, eta: float):
    """Step h minimising <g,h> + (L/2)||h||^2 + (eta/6)||h||^3.

    The minimiser is ``-tau g/||g||`` with ``L tau + (eta/2) tau^2 = ||g||``;
    tau is computed in the cancellation-free form 2||g||/(L + sqrt(L^2 + 2 eta ||g||)).
    ``x`` only fixes the shape of the result.
    """
    if not eta > 0 or not L > 0:
        raise ConfigurationError("need eta > 0 and L > 0")
    g = np.asarray(g, dtype=float)
    gn = float(np.linalg.norm(g))
    if gn == 0.0:
        return np.zeros_like(np.asarray(x, dtype=float))
    tau = 2.0 * gn / (L + math.sqrt(L * L + 2.0 * eta * gn))
    return -tau * g / gn


def run_cubic_gd(x0, oracle: ObjectiveOracle, config: BaselineConfig, monitor=None, name="cubic_gd") -> IterateTrace:
    eta = config.eta if config.eta is not None else max(oracle.smoothness.gamma, ETA_FLOOR)
    x = np.array(x0, dtype=float)
    rec = Recorder(name, keep_iterates=config.keep_iterates, monitor=monitor)
    for t in range(config.max_iters + 1):
        f = oracle.value(x)
        g = oracle.gradient(x)
        gn = float(np.linalg.norm(g))
        if gn <= config.grad_tol or t == config.max_iters:
            rec.add(t, x, f, gn)
            break
        h = cubic_gd_step(x, g, config.L, eta)
        rec.add(t, x, f, gn, eta=eta, step_norm=float(np.linalg.norm(h)), mu_t=config.L)
        x = x + h
    return rec.finish(x)


def nesterov_ag_run(x0, oracle: ObjectiveOracle, config: BaselineConfig, monitor=None, name="ag") -> IterateTrace:
    """Constant-step accelerated gradient.

    x_{k+1} = y_k - grad f(y_k)/L and y_{k+1} = x_{k+1} + b_k (x_{k+1} - x_k), with
    b_k = k/(k+3) in convex mode and (sqrt L - sqrt lam)/(sqrt L + sqrt lam) in strong mode.
    Rows record x_k.
    """
    mode = config.momentum or ("strong" if config.lam > 0 else "convex")
    L = config.L
    if mode == "strong":
        sL, sl = math.sqrt(L), math.sqrt(config.lam)
        fixed = (sL - sl) / (sL + sl)
    x = np.array(x0, dtype=float)
    y = x.copy()
    rec = Recorder(name, keep_iterates=config.keep_iterates, monitor=monitor)
    gy = oracle.gradient(y)
    for k in range(config.max_iters + 1):
        f = oracle.value(x)
        gx = gy if k == 0 else oracle.gradient(x)
        gn = float(np.linalg.norm(gx))
        if gn <= config.grad_tol or k == config.max_iters:
            rec.add(k, x, f, gn)
            break
        if k > 0:
            gy = oracle.gradient(y)
        x_next = y - gy / L
        b = fixed if mode == "strong" else k / (k + 3.0)
        y = x_next + b * (x_next - x)
        rec.add(k, x, f, gn, step_norm=float(np.linalg.norm(x_next - x)))
        x = x_next
    return rec.finish(x)


def run_baseline(x0, oracle: ObjectiveOracle, config: BaselineConfig, monitor=None, name=None) -> IterateTrace:
    if config.method == "cubic_gd":
        return run_cubic_gd(x0, oracle, config, monitor, name or "cubic_gd")
    return nesterov_ag_run(x0, oracle, config, monitor, name or "ag")
