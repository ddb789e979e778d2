"""Solvers for the cubic model  min_h <g,h> + 1/2 <Hh,h> + (eta/6)||h||^3.

All solvers return a :class:`CubicSolution` whose certificate fields are
evaluated in the full space: the multiplier ``(eta/2)||h||``, the KKT residual
``||(H + multiplier I) h + g||`` and ``lambda_min(H + multiplier I)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ContractViolation, SubproblemNonconvergence

DEFAULT_LANCZOS_DIM = 50


@dataclass(frozen=True)
class CubicModel:
    g: np.ndarray
    H: np.ndarray
    eta: float
    anchor: Optional[np.ndarray] = None

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        H = np.asarray(self.H, dtype=float)
        if g.ndim != 1 or H.shape != (g.size, g.size):
            raise ContractViolation(f"gradient {g.shape} and Hessian {H.shape} disagree")
        if not self.eta > 0:
            raise ConfigurationError(f"eta must be positive, got {self.eta}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "H", H)

    @property
    def n(self):
        return self.g.size

    def value(self, h):
        """Model value relative to the anchor (the constant term is dropped)."""
        return float(self.g @ h + 0.5 * h @ (self.H @ h) + self.eta / 6.0 * np.linalg.norm(h) ** 3)

    def grad(self, h):
        return self.g + self.H @ h + 0.5 * self.eta * np.linalg.norm(h) * h

    def radius_bound(self):
        """Upper bound on the norm of the global minimiser."""
        normH = np.linalg.norm(self.H, 2)
        return (normH + math.sqrt(normH**2 + 2.0 * self.eta * np.linalg.norm(self.g))) / self.eta


@dataclass(frozen=True)
class CubicSolution:
    step: np.ndarray
    multiplier: float
    model_decrease: float
    kkt_residual: float
    psd_certificate: float
    iterations: int = 0
    approximate: bool = False
    krylov_dim: Optional[int] = None

    @property
    def step_norm(self):
        return float(np.linalg.norm(self.step))


def certify(model: CubicModel, h, iterations=0, approximate=False, krylov_dim=None, theta_min=None):
    h = np.asarray(h, dtype=float)
    lam = 0.5 * model.eta * float(np.linalg.norm(h))
    kkt = float(np.linalg.norm(model.H @ h + lam * h + model.g))
    if theta_min is None:
        theta_min = float(np.linalg.eigvalsh(model.H)[0])
    return CubicSolution(
        step=h,
        multiplier=lam,
        model_decrease=-model.value(h),
        kkt_residual=kkt,
        psd_certificate=theta_min + lam,
        iterations=iterations,
        approximate=approximate,
        krylov_dim=krylov_dim,
    )


def solve_exact(model: CubicModel, tol: float = 1e-12, max_iter: int = 200) -> CubicSolution:
    """Global minimiser via the eigendecomposition of H and the secular equation in r = ||h||.

    The root of ``||(Theta + (eta/2) r I)^{-1} V^T g|| = r`` is bracketed on
    ``(max(0, -2 theta_min/eta), r_max]`` and found by bisection, switching to
    safeguarded Newton once the bracket is narrower than ``1e-3 r_max``.
    """
    if not tol > 0:
        raise ConfigurationError("tol must be positive")
    g, eta = model.g, model.eta
    gnorm = float(np.linalg.norm(g))
    target = tol * max(1.0, gnorm)
    theta, V = np.linalg.eigh(model.H)
    gt = V.T @ g
    theta_min = float(theta[0])
    half = 0.5 * eta

    r_lo = max(0.0, -theta_min / half)
    scale = max(1.0, float(np.abs(theta).max()))
    bottom = np.abs(theta - theta_min) <= 1e-10 * scale
    if theta_min <= 0.0 and np.linalg.norm(gt[bottom]) <= 1e-14 * max(1.0, gnorm):
        # Hard case candidate: the bottom eigenspace does not see g.
        rest = ~bottom
        h_rest = np.zeros_like(gt)
        h_rest[rest] = -gt[rest] / (theta[rest] - theta_min)
        if np.linalg.norm(h_rest) <= r_lo:
            tau = math.sqrt(max(r_lo**2 - float(h_rest @ h_rest), 0.0))
            h_rest[np.flatnonzero(bottom)[0]] = tau
            return certify(model, V @ h_rest, theta_min=theta_min)

    def h_of(r):
        return -gt / (theta + half * r)

    a, b = r_lo, model.radius_bound()
    width_switch = 1e-3 * b
    r = 0.5 * (a + b)
    best = math.inf
    for it in range(1, max_iter + 1):
        ht = h_of(r)
        hn = float(np.linalg.norm(ht))
        phi = hn - r
        res = half * abs(phi) * hn
        best = min(best, res)
        if res <= 0.5 * target or (b - a) <= 4.0 * np.finfo(float).eps * max(b, 1.0):
            return certify(model, V @ ht, iterations=it, theta_min=theta_min)
        if phi > 0:
            a = r
        else:
            b = r
        r_next = 0.5 * (a + b)
        if b - a < width_switch and hn > 0:
            dnorm = -half * float(np.sum(gt**2 / (theta + half * r) ** 3)) / hn
            newton = r - phi / (dnorm - 1.0)
            if a < newton < b:
                r_next = newton
        r = r_next
    raise SubproblemNonconvergence("secular equation did not converge", best)


def _zero_solution(model):
    return certify(model, np.zeros(model.n))


def solve_lanczos(model: CubicModel, max_dim: Optional[int] = None, tol: float = 1e-10) -> CubicSolution:
    """Approximate minimiser over the Krylov space span{g, Hg, ..., H^{k-1} g}.

    The basis is built with full reorthogonalisation and grown one vector at
    a time until the full-space KKT residual is below ``tol * max(1, ||g||)``.
    """
    if max_dim is not None and max_dim < 1:
        raise ConfigurationError("max_dim must be >= 1")
    g, H, n = model.g, model.H, model.n
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return _zero_solution(model)
    kmax = min(n, DEFAULT_LANCZOS_DIM if max_dim is None else max_dim)
    target = tol * max(1.0, gnorm)
    theta_min = float(np.linalg.eigvalsh(H)[0])
    breakdown = 1e-13 * max(1.0, float(np.abs(H).max()))

    Q = np.zeros((n, kmax))
    alphas = np.zeros(kmax)
    betas = np.zeros(kmax)
    Q[:, 0] = g / gnorm
    for k in range(1, kmax + 1):
        q = Q[:, k - 1]
        w = H @ q
        alphas[k - 1] = q @ w
        for _ in range(2):
            w -= Q[:, :k] @ (Q[:, :k].T @ w)
        beta = float(np.linalg.norm(w))

        T = np.diag(alphas[:k]) + np.diag(betas[: k - 1], 1) + np.diag(betas[: k - 1], -1)
        e1 = np.zeros(k)
        e1[0] = gnorm
        reduced = solve_exact(CubicModel(e1, T, model.eta), tol=min(tol, 1e-12))
        h = Q[:, :k] @ reduced.step
        invariant = beta <= breakdown
        sol = certify(model, h, iterations=k, krylov_dim=k, theta_min=theta_min)
        if sol.kkt_residual <= target or invariant:
            return sol
        if k == kmax:
            return certify(model, h, iterations=k, approximate=True, krylov_dim=k, theta_min=theta_min)
        betas[k - 1] = beta
        Q[:, k] = w / beta
    raise AssertionError("unreachable")


def _model_change(model: CubicModel, h, d):
    """m(h + d) - m(h) without subtracting two nearly equal model values."""
    Hd = model.H @ d
    a, b = float(np.linalg.norm(h + d)), float(np.linalg.norm(h))
    sq = float(2.0 * h @ d + d @ d)
    cube = sq / (a + b) * (a * a + a * b + b * b) if a + b > 0 else 0.0
    return float(model.g @ d + h @ Hd + 0.5 * d @ Hd) + model.eta / 6.0 * cube


def solve_gd(
    model: CubicModel,
    max_iters: int = 10_000,
    step_size: Optional[float] = None,
    tol: float = 1e-10,
    history: Optional[list] = None,
) -> CubicSolution:
    """Gradient descent on the model from h = 0.

    The default step is ``1/(||H|| + eta r_max)``. Each step's model change is
    evaluated directly from the step, so the decrease test stays accurate
    near the minimiser; a step that would raise the model is halved, and the
    recorded model values never increase.
    Ends flagged ``approximate`` if the KKT residual stays above
    ``1e-4 max(1, ||g||)``.
    """
    g = model.g
    gscale = max(1.0, float(np.linalg.norm(g)))
    limit = 1.0 / (np.linalg.norm(model.H, 2) + model.eta * model.radius_bound())
    if step_size is None:
        step_size = limit
    elif step_size > limit * (1 + 1e-12):
        raise ConfigurationError(f"step_size must not exceed {limit:.6g}")
    h = np.zeros(model.n)
    val = 0.0
    if history is not None:
        history.append(val)
    it = 0
    for it in range(1, max_iters + 1):
        grad = model.grad(h)
        if np.linalg.norm(grad) <= tol * gscale:
            it -= 1
            break
        s = step_size
        change = _model_change(model, h, -s * grad)
        halvings = 0
        while change > 0.0 and halvings < 30:
            s *= 0.5
            halvings += 1
            change = _model_change(model, h, -s * grad)
        if change > 0.0:
            it -= 1
            break
        h = h - s * grad
        val += change
        if history is not None:
            history.append(val)
    sol = certify(model, h, iterations=it)
    if sol.kkt_residual > 1e-4 * gscale:
        sol = certify(model, h, iterations=it, approximate=True)
    return sol
