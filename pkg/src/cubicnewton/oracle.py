"""Objective oracles: logistic finite sums, quadratic fixtures, subsampled Hessians."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.special import expit

from .errors import ConfigurationError, ContractViolation

SYMMETRY_TOL = 1e-12

# Third derivative of log(1 + exp(-z)) is bounded by this in absolute value.
SOFTPLUS_THIRD_DERIV_BOUND = 1.0 / (6.0 * math.sqrt(3.0))


@dataclass(frozen=True)
class SmoothnessInfo:
    """Problem constants: strong convexity ``lam``, Hessian Lipschitz ``gamma``,
    gradient Lipschitz ``lipschitz_grad`` (optional)."""

    lam: float = 0.0
    gamma: float = 0.0
    lipschitz_grad: Optional[float] = None

    def __post_init__(self):
        if self.lam < 0 or self.gamma < 0:
            raise ConfigurationError("smoothness constants must be nonnegative")
        if self.lipschitz_grad is not None:
            if self.lipschitz_grad <= 0:
                raise ConfigurationError("lipschitz_grad must be positive")
            if self.lam > self.lipschitz_grad * (1 + 1e-12):
                raise ConfigurationError("lam must not exceed lipschitz_grad")


class ObjectiveOracle(ABC):
    """Finite-sum objective f(x) = (1/m) sum_i f_i(x).

    Subclasses are immutable after construction; every method is a pure
    function of its arguments.
    """

    n: int
    smoothness: SmoothnessInfo

    @property
    def component_count(self) -> int:
        return 1

    @abstractmethod
    def value(self, x: np.ndarray) -> float: ...

    @abstractmethod
    def gradient(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def hessian(self, x: np.ndarray) -> np.ndarray: ...

    def component_hessian(self, i: int, x: np.ndarray) -> np.ndarray:
        if i != 0:
            raise IndexError(i)
        return self.hessian(x)

    def subsample_hessian(self, indices: Sequence[int], x: np.ndarray) -> np.ndarray:
        """Mean of the component Hessians listed in ``indices``."""
        acc = np.zeros((self.n, self.n))
        for i in indices:
            acc += self.component_hessian(int(i), x)
        return acc / len(indices)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ContractViolation(f"expected a vector of dimension {self.n}, got shape {x.shape}")
        return x


class LogisticProblem(ObjectiveOracle):
    """L2-regularised logistic loss over samples ``u^i`` with labels ``v^i`` in {-1, +1}.

    Component ``i`` is ``log(1 + exp(-v^i <u^i, x>)) + (lam/2)||x||^2`` so the
    component Hessians average exactly to the full Hessian.

    ``lam`` defaults to ``1/m``. Constants computed on construction:

    * ``lipschitz_grad``: ``lam + max_i ||u^i||^2 / 4`` (bounds every component Hessian)
    * ``mean_curvature_bound``: ``lam + mean_i ||u^i||^2 / 4`` (bounds the full Hessian)
    * ``gamma``: ``mean_i ||u^i||^3 / (6 sqrt 3)`` unless overridden
    """

    def __init__(self, features, labels, lam: Optional[float] = None, gamma: Optional[float] = None):
        U = sparse.csr_matrix(features, dtype=float)
        v = np.asarray(labels, dtype=float).ravel()
        if U.shape[0] != v.shape[0]:
            raise ContractViolation("features and labels disagree on the sample count")
        if U.shape[0] == 0:
            raise ContractViolation("empty problem")
        if not np.all(np.isin(v, (-1.0, 1.0))):
            raise ContractViolation("labels must be -1 or +1")
        self.U = U
        self.labels = v
        self.m, self.n = U.shape
        self.lam = 1.0 / self.m if lam is None else float(lam)
        if self.lam < 0:
            raise ConfigurationError("lam must be nonnegative")

        sq_norms = np.asarray(U.multiply(U).sum(axis=1)).ravel()
        norms = np.sqrt(sq_norms)
        self.mean_curvature_bound = self.lam + 0.25 * float(sq_norms.mean())
        lipschitz = self.lam + 0.25 * float(sq_norms.max())
        if gamma is None:
            gamma = SOFTPLUS_THIRD_DERIV_BOUND * float(np.mean(norms**3))
        self.smoothness = SmoothnessInfo(
            lam=self.lam, gamma=float(gamma), lipschitz_grad=lipschitz if lipschitz > 0 else None
        )

    @classmethod
    def from_dataset(cls, dataset, lam=None, gamma=None, dim=None):
        return cls(dataset.matrix(dim), dataset.labels, lam=lam, gamma=gamma)

    @property
    def component_count(self) -> int:
        return self.m

    def margins(self, x):
        return self.labels * (self.U @ x)

    def value(self, x):
        x = self._check(x)
        z = self.margins(x)
        return float(np.mean(np.logaddexp(0.0, -z)) + 0.5 * self.lam * (x @ x))

    def gradient(self, x):
        x = self._check(x)
        z = self.margins(x)
        coef = -self.labels * expit(-z)
        return self.U.T @ coef / self.m + self.lam * x

    def _curvature_matrix(self, rows, x):
        U = self.U if rows is None else self.U[rows]
        z = (self.labels if rows is None else self.labels[rows]) * (U @ x)
        w = expit(z) * expit(-z)
        H = (U.T @ U.multiply(w[:, None])).toarray() / U.shape[0]
        H = 0.5 * (H + H.T)
        H[np.diag_indices_from(H)] += self.lam
        return H

    def hessian(self, x):
        return self._curvature_matrix(None, self._check(x))

    def component_hessian(self, i, x):
        x = self._check(x)
        u = self.U[i].toarray().ravel()
        z = self.labels[i] * (u @ x)
        H = (expit(z) * expit(-z)) * np.outer(u, u)
        H[np.diag_indices_from(H)] += self.lam
        return H

    def subsample_hessian(self, indices, x):
        return self._curvature_matrix(np.asarray(indices, dtype=int), self._check(x))


class QuadraticProblem(ObjectiveOracle):
    """f(x) = mean_i (1/2 x^T Q_i x - b_i^T x); a single component unless stacked."""

    def __init__(self, Qs, bs):
        Qs = np.asarray(Qs, dtype=float)
        bs = np.asarray(bs, dtype=float)
        if Qs.ndim == 2:
            Qs, bs = Qs[None], bs[None]
        if Qs.ndim != 3 or Qs.shape[1] != Qs.shape[2] or bs.shape != Qs.shape[:2]:
            raise ContractViolation("incompatible quadratic data shapes")
        if np.max(np.abs(Qs - Qs.transpose(0, 2, 1))) > SYMMETRY_TOL:
            raise ContractViolation("Q must be symmetric")
        self.Qs = 0.5 * (Qs + Qs.transpose(0, 2, 1))
        self.bs = bs
        self.Q = self.Qs.mean(axis=0)
        self.b = self.bs.mean(axis=0)
        self.n = self.Q.shape[0]
        eig = np.linalg.eigvalsh(self.Q)
        top = max(float(eig[-1]), 0.0)
        self.smoothness = SmoothnessInfo(
            lam=max(float(eig[0]), 0.0), gamma=0.0, lipschitz_grad=top if top > 0 else None
        )
        # Largest component curvature, the constant in the subsample-size bound.
        self.component_bound = float(max(np.abs(np.linalg.eigvalsh(Q)).max() for Q in self.Qs))

    @property
    def component_count(self):
        return self.Qs.shape[0]

    def value(self, x):
        x = self._check(x)
        return float(0.5 * x @ self.Q @ x - self.b @ x)

    def gradient(self, x):
        x = self._check(x)
        return self.Q @ x - self.b

    def hessian(self, x):
        self._check(x)
        return self.Q.copy()

    def component_hessian(self, i, x):
        self._check(x)
        return self.Qs[i].copy()

    def subsample_hessian(self, indices, x):
        self._check(x)
        return self.Qs[np.asarray(indices, dtype=int)].mean(axis=0)

    def minimizer(self):
        return np.linalg.solve(self.Q, self.b)


def make_quadratic_problem(Q, b) -> QuadraticProblem:
    """Quadratic fixture ``1/2 x^T Q x - b^T x`` with ``Q`` symmetric PSD."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ContractViolation("Q must be square")
    if np.max(np.abs(Q - Q.T)) > SYMMETRY_TOL:
        raise ContractViolation("Q must be symmetric")
    eig = np.linalg.eigvalsh(Q)
    if eig[0] < -1e-12 * max(1.0, abs(eig[-1])):
        raise ContractViolation("Q must be positive semidefinite")
    return QuadraticProblem(Q, b)


HESSIAN_MODES = ("exact", "shifted_a1", "shifted_a4", "raw", "scaled_identity")
SUBSAMPLED_MODES = ("shifted_a1", "shifted_a4", "raw")


@dataclass(frozen=True)
class HessianStrategy:
    """How the solvers approximate the Hessian.

    ``exact``            true Hessian, mu_t = 0
    ``shifted_a1``       subsample + delta I, mu_t = 2 delta
    ``shifted_a4``       subsample + 3 delta I, mu_t = 4 delta
    ``raw``              subsample only, mu_t = delta
    ``scaled_identity``  L I, mu_t = L (``lipschitz`` or the oracle's lipschitz_grad)
    """

    mode: str = "exact"
    sample_count: Optional[int] = None
    delta: float = 0.0
    seed: int = 0
    lipschitz: Optional[float] = None

    def __post_init__(self):
        if self.mode not in HESSIAN_MODES:
            raise ConfigurationError(f"unknown Hessian mode {self.mode!r}")
        if self.mode in SUBSAMPLED_MODES:
            if self.sample_count is None or self.sample_count < 1:
                raise ConfigurationError("subsampled modes need sample_count >= 1")
            if not self.delta > 0:
                raise ConfigurationError("subsampled modes need delta > 0")
        if self.seed < 0:
            raise ConfigurationError("seed must be nonnegative")

    def nominal_mu(self, oracle: Optional[ObjectiveOracle] = None) -> float:
        if self.mode == "exact":
            return 0.0
        if self.mode == "scaled_identity":
            return _identity_scale(self, oracle)
        return {"shifted_a1": 2.0, "shifted_a4": 4.0, "raw": 1.0}[self.mode] * self.delta


def _identity_scale(strategy, oracle):
    L = strategy.lipschitz
    if L is None and oracle is not None:
        L = oracle.smoothness.lipschitz_grad
    if L is None or L <= 0:
        raise ConfigurationError("scaled_identity needs a positive Lipschitz constant")
    return float(L)


def sample_indices(m: int, k: int, seed: int, draw: int) -> np.ndarray:
    """k distinct indices from range(m); stream keyed by (seed, draw)."""
    if not 1 <= k <= m:
        raise ConfigurationError(f"sample_count must lie in [1, {m}], got {k}")
    key = np.array([seed, draw], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    return np.sort(rng.choice(m, size=k, replace=False))


def subsampled_hessian(oracle: ObjectiveOracle, x, strategy: HessianStrategy, draw: int = 0):
    """Hessian approximation and its error parameter ``mu_t`` at ``x``.

    ``draw`` selects an independent sample for the same ``strategy.seed``;
    solvers pass the iteration counter.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ContractViolation("x must be finite")
    mode = strategy.mode
    if mode == "exact":
        return oracle.hessian(x), 0.0
    if mode == "scaled_identity":
        L = _identity_scale(strategy, oracle)
        return L * np.eye(oracle.n), L
    idx = sample_indices(oracle.component_count, strategy.sample_count, strategy.seed, draw)
    H = oracle.subsample_hessian(idx, x)
    H = 0.5 * (H + H.T)
    d = strategy.delta
    if mode == "shifted_a1":
        H[np.diag_indices_from(H)] += d
    elif mode == "shifted_a4":
        H[np.diag_indices_from(H)] += 3.0 * d
    return H, strategy.nominal_mu()


def sample_size_bound(L: float, delta: float, Lambda: float, n: int, components_convex: bool = False) -> int:
    """Smallest |S_H| for which the subsample is within ``delta`` in spectrum w.p. ``1 - Lambda``."""
    if not 0 < Lambda < 1:
        raise ConfigurationError("Lambda must lie in (0, 1)")
    if not delta > 0 or not L > 0 or n < 1:
        raise ConfigurationError("need delta > 0, L > 0, n >= 1")
    c = 4.0 if components_convex else 16.0
    return int(math.ceil(c * L * L * math.log(2.0 * n / Lambda) / (delta * delta)))


def estimate_lipschitz(oracle: ObjectiveOracle, x0, iters: int = 20, tol: float = 1e-6, seed: int = 0) -> float:
    """Largest eigenvalue of the Hessian at ``x0`` by power iteration."""
    H = oracle.hessian(np.asarray(x0, dtype=float))
    q = np.random.default_rng(seed).standard_normal(oracle.n)
    q /= np.linalg.norm(q)
    est = 0.0
    for _ in range(iters):
        z = H @ q
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        new = float(q @ z)
        q = z / nz
        if abs(new - est) <= tol * max(1.0, abs(new)):
            est = new
            break
        est = new
    return est
