"""Special functions and quadrature rules.

Gamma/Beta are evaluated in log space so that ratios such as
Gamma(l + n - 1) / Gamma(l + 1) stay finite for l in the hundreds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from .errors import ConfigurationError, DomainError


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def log_beta(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise DomainError(f"beta requires positive arguments, got ({a!r}, {b!r})")
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def beta(a: float, b: float) -> float:
    """Euler Beta function Gamma(a) Gamma(b) / Gamma(a + b)."""
    return math.exp(log_beta(a, b))


def gamma_ratio(a: float, b: float) -> float:
    """Gamma(a) / Gamma(b) for positive a, b, computed without overflow."""
    return math.exp(log_gamma(a) - log_gamma(b))


def sphere_area(d: int) -> float:
    """Surface area of the unit d-sphere in R^(d+1)."""
    if int(d) != d or d < 1:
        raise DomainError(f"sphere_area requires an integer d >= 1, got {d!r}")
    return 2.0 * math.pi ** ((d + 1) / 2) / math.gamma((d + 1) / 2)


def gegenbauer_eval(l: int, lam: float, u):
    """C_l^lam(u) by the three-term recurrence.

    ``u`` may be a scalar or an array; every entry must lie in [-1, 1].
    """
    if l < 0:
        raise DomainError("degree must be nonnegative")
    if lam <= 0:
        raise DomainError("Gegenbauer parameter must be positive")
    u_arr = np.asarray(u, dtype=float)
    if np.any(np.abs(u_arr) > 1.0 + 1e-14):
        raise DomainError("Gegenbauer argument outside [-1, 1]")
    out = gegenbauer_table(l, lam, u_arr)[l]
    return float(out) if out.ndim == 0 else out


def gegenbauer_table(L: int, lam: float, u) -> np.ndarray:
    """Array of shape (L+1, *u.shape) with C_0^lam(u) ... C_L^lam(u)."""
    u = np.asarray(u, dtype=float)
    table = np.empty((L + 1,) + u.shape)
    table[0] = 1.0
    if L >= 1:
        table[1] = 2.0 * lam * u
    for k in range(1, L):
        table[k + 1] = (2.0 * (k + lam) * u * table[k] - (k + 2.0 * lam - 1.0) * table[k - 1]) / (k + 1)
    return table


def gegenbauer_log_norm(l, lam: float):
    """log of int_{-1}^{1} (C_l^lam)^2 (1-u^2)^(lam-1/2) du."""
    l = np.asarray(l, dtype=float)
    return (
        math.log(math.pi)
        + (1.0 - 2.0 * lam) * math.log(2.0)
        + special.gammaln(l + 2.0 * lam)
        - special.gammaln(l + 1.0)
        - np.log(l + lam)
        - 2.0 * math.lgamma(lam)
    )


class RuleKind(str, Enum):
    JACOBI_SPHERE = "jacobi_sphere"
    RADIAL_HALFLINE = "radial_halfline"
    LEGENDRE_INTERVAL = "legendre_interval"


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights pair; ``sum(w * f(x))`` approximates the target integral.

    jacobi_sphere(n):  int_{-1}^{1} f(u) (1-u^2)^((n-2)/2) du
    legendre_interval: int_{-1}^{1} f(u) du
    radial_halfline(n): int_{R^n} f(|x|) dx  (radial measure folded into weights)
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: RuleKind
    n: int | None = None

    def __post_init__(self):
        for arr in (self.nodes, self.weights):
            arr.setflags(write=False)

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def make_rule(kind, N: int, n: int | None = None) -> QuadratureRule:
    try:
        kind = RuleKind(kind)
    except ValueError:
        raise ConfigurationError(f"unsupported quadrature kind {kind!r}") from None
    if N < 2:
        raise ConfigurationError("quadrature rules need N >= 2 nodes")

    if kind is RuleKind.LEGENDRE_INTERVAL:
        x, w = special.roots_legendre(N)
        return QuadratureRule(np.asarray(x), np.asarray(w), kind)

    if n is None or n < 2:
        raise ConfigurationError(f"{kind.value} rule needs a dimension n >= 2")

    if kind is RuleKind.JACOBI_SPHERE:
        a = (n - 2) / 2.0
        x, w = special.roots_jacobi(N, a, a)
        return QuadratureRule(np.asarray(x), np.asarray(w), kind, n)

    # r = tan(pi s / 2), s in (0, 1): algebraic decay becomes trigonometric polynomials
    s, ws = special.roots_legendre(N)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    r = np.tan(0.5 * np.pi * s)
    jac = 0.5 * np.pi * (1.0 + r * r)
    w = ws * jac * sphere_area(n - 1) * r ** (n - 1)
    return QuadratureRule(r, w, kind, n)


def radial_integral(f, n: int, N: int = 200) -> float:
    """int_{R^n} f(|x|) dx for radial f decaying at least like |x|^(-n-2)."""
    return make_rule(RuleKind.RADIAL_HALFLINE, N, n).integrate(f)
