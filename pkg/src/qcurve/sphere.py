"""Geometry of S^n and the zonal spectral representation.

A zonal field is rotationally symmetric about an axis ``pole`` and is stored
as a Gegenbauer series in u = <x, pole> with parameter lam = (n-1)/2, the
degree-l zonal harmonics on S^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import specfun
from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class ProblemParams:
    """Dimensional context: sigma = 1 + m/2 and n = 2 sigma + 2.

    ``green_fault`` multiplies the Riesz-kernel constant; it exists only so the
    verification suite can inject a known error.
    """

    m: int
    green_fault: float = 1.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"m must be a positive integer, got {self.m!r}")
        if abs(self.c_pde - math.gamma(self.n - 1)) > 1e-12 * self.c_pde:
            raise AssertionError("Gamma(n/2+sigma)/Gamma(n/2-sigma) disagrees with Gamma(n-1)")

    @property
    def sigma(self) -> float:
        return 1.0 + self.m / 2.0

    @property
    def n(self) -> int:
        return self.m + 4

    @property
    def lam(self) -> float:
        """Gegenbauer parameter of zonal harmonics on S^n."""
        return (self.n - 1) / 2.0

    @property
    def c_pde(self) -> float:
        n, s = self.n, self.sigma
        return specfun.gamma_ratio(n / 2 + s, n / 2 - s)

    @property
    def c_green(self) -> float:
        n, s = self.n, self.sigma
        val = math.exp(
            specfun.log_gamma((n - 2 * s) / 2)
            - 2 * s * math.log(2.0)
            - (n / 2) * math.log(math.pi)
            - specfun.log_gamma(s)
        )
        return val * self.green_fault

    @property
    def area(self) -> float:
        """|S^n|."""
        return specfun.sphere_area(self.n)

    @property
    def area_equator(self) -> float:
        """|S^(n-1)|."""
        return specfun.sphere_area(self.n - 1)


# --------------------------------------------------------------------------
# points


def as_point(x, tol: float = 1e-12) -> np.ndarray:
    p = np.asarray(x, dtype=float)
    if p.ndim != 1:
        raise DomainError("a sphere point is a 1-d coordinate vector")
    if abs(np.linalg.norm(p) - 1.0) > tol:
        raise DomainError(f"point is not on the unit sphere (|x| = {np.linalg.norm(p)!r})")
    return p


def north_pole(n: int) -> np.ndarray:
    e = np.zeros(n + 1)
    e[-1] = 1.0
    return e


def south_pole(n: int) -> np.ndarray:
    return -north_pole(n)


def chordal_sq(p, q) -> float:
    d = np.asarray(p) - np.asarray(q)
    return float(d @ d)


def geodesic_distance(p, q) -> float:
    p = as_point(p)
    q = as_point(q)
    # 2 atan2(|p-q|, |p+q|) is the clamped arccos without its loss of accuracy at 0 and pi
    return float(2.0 * math.atan2(np.linalg.norm(p - q), np.linalg.norm(p + q)))


def tangent_frame(x) -> np.ndarray:
    """(n+1) x n matrix whose orthonormal columns span the tangent space at x."""
    x = np.asarray(x, dtype=float)
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(x.size)]), mode="complete")
    return q[:, 1:]


def _reflection_to(center: np.ndarray) -> np.ndarray:
    """Orthogonal matrix mapping the south pole -e_{n+1} to ``center``."""
    s = south_pole(center.size - 1)
    v = s - center
    nv = np.linalg.norm(v)
    if nv < 1e-15:
        return np.eye(center.size)
    v /= nv
    return np.eye(center.size) - 2.0 * np.outer(v, v)


def stereographic(y, center=None):
    """Inverse stereographic map F: R^n -> S^n with F(0) = ``center``.

    Returns ``(point, jacobian)`` where ``jacobian = (2 / (1 + |y|^2))^n``.
    With the default center (south pole) this is
    F(y) = (2y / (1+|y|^2), (|y|^2 - 1) / (|y|^2 + 1)).
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    r2 = float(y @ y)
    x = np.empty(n + 1)
    x[:n] = 2.0 * y / (1.0 + r2)
    x[n] = (r2 - 1.0) / (r2 + 1.0)
    if center is not None:
        x = _reflection_to(as_point(center)) @ x
    return x, (2.0 / (1.0 + r2)) ** n


def inverse_stereographic(x, center=None) -> np.ndarray:
    """Chart coordinates y with F(y) = x; x must differ from -center."""
    x = as_point(x)
    if center is not None:
        x = _reflection_to(as_point(center)) @ x
    if x[-1] >= 1.0 - 1e-15:
        raise DomainError("the antipode of the chart center has no chart coordinates")
    return x[:-1] / (1.0 - x[-1])


def chart_factor(y) -> float:
    """H(y) = 2 / (1 + |y|^2), the conformal factor of the chart."""
    y = np.asarray(y, dtype=float)
    return 2.0 / (1.0 + float(y @ y))


# --------------------------------------------------------------------------
# zonal spectral representation


@dataclass(frozen=True, eq=False)
class ZonalBasis:
    """Gegenbauer truncation of degree L with Gauss-Jacobi collocation.

    ``N`` collocation nodes (default L+1) carry the field values; a padded
    rule with ``pad * (L + 1)`` nodes is used to project nonlinear terms.
    """

    params: ProblemParams
    L: int = 256
    N: int | None = None
    pad: int = 2

    def __post_init__(self):
        if self.L < 4:
            raise ConfigurationError("zonal truncation needs L >= 4")
        if self.N is None:
            object.__setattr__(self, "N", self.L + 1)
        if self.N < self.L + 1:
            raise ConfigurationError(f"{self.N} collocation nodes cannot carry degree {self.L}")

    @cached_property
    def rule(self) -> specfun.QuadratureRule:
        return specfun.make_rule("jacobi_sphere", self.N, self.params.n)

    @cached_property
    def padded_rule(self) -> specfun.QuadratureRule:
        return specfun.make_rule("jacobi_sphere", max(self.pad * (self.L + 1), self.N), self.params.n)

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @cached_property
    def norms(self) -> np.ndarray:
        """h_l = int C_l^2 (1-u^2)^((n-2)/2) du."""
        return np.exp(specfun.gegenbauer_log_norm(np.arange(self.L + 1), self.params.lam))

    @cached_property
    def synthesis(self) -> np.ndarray:
        """B[j, l] = C_l(u_j) at collocation nodes."""
        return self.table(self.nodes).T

    @cached_property
    def analysis(self) -> np.ndarray:
        """A[l, j] with coeffs = A @ values (exact for degree <= L)."""
        return (self.synthesis * self.rule.weights[:, None]).T / self.norms[:, None]

    @cached_property
    def padded_synthesis(self) -> np.ndarray:
        return self.table(self.padded_rule.nodes).T

    @cached_property
    def padded_analysis(self) -> np.ndarray:
        return (self.padded_synthesis * self.padded_rule.weights[:, None]).T / self.norms[:, None]

    def table(self, u) -> np.ndarray:
        return specfun.gegenbauer_table(self.L, self.params.lam, np.asarray(u, dtype=float))

    def evaluate(self, coeffs, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.tensordot(coeffs, self.table(u), axes=(0, 0))

    def project(self, f) -> np.ndarray:
        """Degree-L coefficients of a function of u, sampled on the padded rule."""
        return self.padded_analysis @ f(self.padded_rule.nodes)

    def integrate(self, f, padded: bool = True) -> float:
        """int_{S^n} f(<x, pole>) dvol for a function of u."""
        rule = self.padded_rule if padded else self.rule
        return self.params.area_equator * rule.integrate(f)


def zonal_transform(values, basis: ZonalBasis) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (basis.N,):
        raise ConfigurationError(f"expected {basis.N} nodal values, got shape {values.shape}")
    return basis.analysis @ values


def zonal_inverse(coeffs, basis: ZonalBasis) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (basis.L + 1,):
        raise ConfigurationError(f"expected {basis.L + 1} coefficients, got shape {coeffs.shape}")
    return basis.synthesis @ coeffs


@dataclass(frozen=True, eq=False)
class ZonalField:
    """A function on S^n depending only on u = <x, pole>."""

    basis: ZonalBasis
    coeffs: np.ndarray
    pole: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.basis.L + 1,):
            raise ConfigurationError("coefficient vector does not match the basis truncation")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.pole is None:
            object.__setattr__(self, "pole", north_pole(self.params.n))

    @property
    def params(self) -> ProblemParams:
        return self.basis.params

    @classmethod
    def from_values(cls, values, basis: ZonalBasis, pole=None) -> "ZonalField":
        return cls(basis, zonal_transform(values, basis), pole)

    @classmethod
    def from_function(cls, f, basis: ZonalBasis, pole=None, padded: bool = False) -> "ZonalField":
        """Project a callable of u; ``padded`` samples on the anti-aliasing rule."""
        coeffs = basis.project(f) if padded else basis.analysis @ f(basis.nodes)
        return cls(basis, coeffs, pole)

    @cached_property
    def values(self) -> np.ndarray:
        return zonal_inverse(self.coeffs, self.basis)

    @cached_property
    def padded_values(self) -> np.ndarray:
        return self.basis.padded_synthesis @ self.coeffs

    def __call__(self, u):
        return self.basis.evaluate(self.coeffs, u)

    def at(self, x) -> float:
        return float(self(np.dot(as_point(x), self.pole)))

    def integral(self) -> float:
        return self.basis.integrate(lambda u: self(u))

    def inner(self, other: "ZonalField") -> float:
        """L^2(S^n) inner product, exact for bandlimited fields."""
        return float(self.params.area_equator * np.sum(self.coeffs * other.coeffs * self.basis.norms))

    def with_coeffs(self, coeffs) -> "ZonalField":
        return ZonalField(self.basis, coeffs, self.pole)

    def chopped(self, tol: float = 64 * np.finfo(float).eps) -> "ZonalField":
        """Drop the spectral tail below ``tol`` (relative, orthonormal scaling).

        Sampled data carry roundoff at the 1e-16 level in every mode; operators
        with growing symbols (P_sigma grows like l^(2 sigma)) amplify that floor.
        """
        scaled = np.abs(self.coeffs) * np.sqrt(self.basis.norms)
        above = np.nonzero(scaled > tol * scaled.max())[0]
        keep = above[-1] + 1 if above.size else 1
        c = self.coeffs.copy()
        c[keep:] = 0.0
        return self.with_coeffs(c)
