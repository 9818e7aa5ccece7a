"""Finite-dimensional reduction near sums of bubbles.

Leading-order gradient of the subcritical functional on configurations
sum_i alpha_i delta_{P_i, t_i}, the Theta constants, and the convex balancing
problem that fixes the heights t_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .bubbles import Bubble, self_energy
from .conformal_op import green_G
from .curvature import CurvatureModel, eval_grad_hess, riemannian_gradient
from .degree import InteractionMatrix, jacobi_eigenvalues
from .errors import ConvexityError, DomainError, NonConvergenceError
from .sphere import ProblemParams, as_point, geodesic_distance


@dataclass(frozen=True)
class ThetaConstants:
    theta1: float
    theta2: float
    theta3: float
    params: ProblemParams

    def __post_init__(self):
        ratio = self.theta2 / self.theta1
        if abs(ratio - 2.0 / self.params.sigma) > 1e-12 * ratio:
            raise AssertionError("theta2/theta1 must equal 2/sigma")

    @property
    def balance_coefficient(self) -> float:
        """theta1/theta2 = sigma/2, the tau-coefficient of the balancing system."""
        return self.theta1 / self.theta2


def theta_constants(params: ProblemParams) -> ThetaConstants:
    n = params.n
    common = math.gamma(n - 1) * params.area_equator * specfun.beta(n / 2, n / 2 - 1)
    return ThetaConstants(
        theta1=2.0 ** (n - 2) * common * (n - 2) / (n * (n - 1)),
        theta2=2.0**n * common / (n * (n - 1)),
        theta3=2.0**n * common,
        params=params,
    )


@dataclass(frozen=True, eq=False)
class ReducedConfig:
    alphas: np.ndarray
    t: np.ndarray
    points: tuple
    tau: float
    A: float = 10.0
    eps0: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "alphas", np.asarray(self.alphas, dtype=float))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "points", tuple(as_point(p) for p in self.points))
        if not (len(self.alphas) == len(self.t) == len(self.points)):
            raise DomainError("alphas, heights and points must have equal length")

    @property
    def k(self) -> int:
        return len(self.t)

    def betas(self, K: CurvatureModel, sigma: float) -> np.ndarray:
        return self.alphas - np.array([K(p) for p in self.points]) ** (-1 / (2 * sigma))

    def violations(self) -> list[str]:
        out = []
        lo, hi = self.tau**-0.5 / self.A, self.A * self.tau**-0.5
        for i, ti in enumerate(self.t):
            if not lo < ti < hi:
                out.append(f"t_{i} = {ti:.4g} outside ({lo:.4g}, {hi:.4g})")
        for i in range(self.k):
            for j in range(i + 1, self.k):
                if geodesic_distance(self.points[i], self.points[j]) < self.eps0:
                    out.append(f"points {i}, {j} closer than {self.eps0}")
        return out


def reduced_gradient(cfg: ReducedConfig, K: CurvatureModel):
    """Leading terms of (dI/dalpha, dI/dt, dI/dP); remainders are not modelled.

    The P-derivative carries an unknown positive factor; it is set to 1, so only
    its direction and zero set are meaningful.
    """
    bad = cfg.violations()
    if bad:
        raise DomainError("configuration outside the bubble neighbourhood: " + "; ".join(bad))
    params = K.params
    n, sigma = params.n, params.sigma
    th = theta_constants(params)
    # ||delta||^2 does not depend on t; t = 1 is resolved exactly at any truncation
    energy = self_energy(Bubble(cfg.points[0], 1.0, params), L=16)
    d_alpha = -2.0 * sigma * energy * cfg.betas(K, sigma)

    Kv = np.array([K(p) for p in cfg.points])
    lap = np.array([np.trace(eval_grad_hess(K, p)[2]) for p in cfg.points])
    t = cfg.t
    d_t = th.theta1 * cfg.tau / (Kv ** (1 / sigma) * t) + th.theta2 * lap / (Kv ** (n / (2 * sigma)) * t**3)
    for i in range(cfg.k):
        for j in range(cfg.k):
            if i != j:
                G = green_G(cfg.points[i], cfg.points[j])
                d_t[i] += th.theta3 * G / (Kv[i] * Kv[j]) ** (1 / (2 * sigma)) / (t[i] ** 2 * t[j])
    d_P = [-riemannian_gradient(K, p) for p in cfg.points]
    return d_alpha, d_t, d_P


def balance_objective(s, M, Kvals, tau, sigma):
    """F(s) = -(sigma/2) tau sum K_j^(-1/sigma) log s_j + s^T M s / 2, with gradient and Hessian."""
    c = 0.5 * sigma * tau * np.asarray(Kvals, dtype=float) ** (-1 / sigma)
    F = -np.sum(c * np.log(s)) + 0.5 * s @ M @ s
    grad = -c / s + M @ s
    hess = np.diag(c / s**2) + M
    return F, grad, hess


def balance_heights(M, Kvals, tau: float, params: ProblemParams, s0=None, tol: float = 1e-12, max_iter: int = 100):
    """Minimise the balancing functional F over the positive orthant.

    Returns (s, t = 1/s, converged). The stationarity condition is
    (sigma/2) tau / (K_i^(1/sigma) t_i) = sum_j M_ij / (t_i^2 t_j).
    """
    Mx = M.entries if isinstance(M, InteractionMatrix) else np.asarray(M, dtype=float)
    mu = M.mu if isinstance(M, InteractionMatrix) else float(jacobi_eigenvalues(Mx)[0])
    if not mu > 0:
        raise ConvexityError(f"mu(M) = {mu:.6g} <= 0: no interior minimum guaranteed")
    if not tau > 0:
        raise DomainError("tau must be positive")
    sigma = params.sigma
    Kvals = np.asarray(Kvals, dtype=float)
    coef = theta_constants(params).balance_coefficient * tau * Kvals ** (-1 / sigma)
    s = np.sqrt(coef / np.diag(Mx)) if s0 is None else np.asarray(s0, dtype=float).copy()
    scale = np.max(coef / s)
    for _ in range(max_iter):
        F, g, H = balance_objective(s, Mx, Kvals, tau, sigma)
        if np.linalg.norm(g) <= tol * scale:
            break
        step = -np.linalg.solve(H, g)
        lam = 1.0
        # stay inside the orthant and decrease F
        while np.any(s + lam * step <= 0) or balance_objective(s + lam * step, Mx, Kvals, tau, sigma)[0] > F + 1e-14 * abs(F):
            lam *= 0.5
            if lam < 1e-12:
                raise NonConvergenceError("line search failed in balance_heights")
        s = s + lam * step
    else:
        raise NonConvergenceError("balance_heights exhausted its iteration budget")
    _, g, H = balance_objective(s, Mx, Kvals, tau, sigma)
    converged = bool(np.linalg.norm(g) <= tol * scale and np.all(np.linalg.eigvalsh(H) > 0))
    return s, 1.0 / s, converged


def mu_target_single(laplacian: float, value: float, sigma: float, n: int) -> float:
    """Limit of tau v(peak)^2 at an isolated blow-up point: -(2/sigma) Lap K / K^(n/2sigma)."""
    return -(2.0 / sigma) * laplacian / value ** (n / (2.0 * sigma))
