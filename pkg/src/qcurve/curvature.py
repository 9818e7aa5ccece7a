"""Prescribed-curvature models K on S^n and their critical-point census.

Three families are supported:

* ``affine``      K(x) = c0 + a.x
* ``quadratic``   K(x) = c0 + x^T A x
* ``zonal_poly``  K(x) = sum_k c_k u^k with u = x_{n+1} = cos(theta)

Riemannian derivatives come from the ambient ones: the gradient is the
tangential projection, and the Hessian in an orthonormal tangent frame E is
E^T D^2K E - (x . DK) Id (the second fundamental form of the unit sphere).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.stats import norm, qmc

from .errors import ConfigurationError, DomainError, SearchFailure
from .sphere import ProblemParams, as_point, geodesic_distance, north_pole, tangent_frame


class ModelKind(str, Enum):
    AFFINE = "affine"
    QUADRATIC = "quadratic"
    ZONAL_POLY = "zonal_poly"


def sphere_samples(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform points on S^n from a scrambled Halton sequence."""
    h = qmc.Halton(d=n + 1, scramble=True, seed=seed).random(count)
    g = norm.ppf(np.clip(h, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class CurvatureModel:
    kind: ModelKind
    params: ProblemParams
    c0: float = 0.0
    a: np.ndarray | None = None
    A: np.ndarray | None = None
    coeffs: tuple = ()
    check_positive: bool = True

    def __post_init__(self):
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        dim = self.params.n + 1
        if kind is ModelKind.AFFINE:
            a = np.asarray(self.a, dtype=float)
            if a.shape != (dim,):
                raise ConfigurationError(f"affine model needs a vector of length {dim}")
            object.__setattr__(self, "a", a)
        elif kind is ModelKind.QUADRATIC:
            A = np.asarray(self.A, dtype=float)
            if A.shape != (dim, dim):
                raise ConfigurationError(f"quadratic model needs a {dim}x{dim} matrix")
            if not np.allclose(A, A.T, atol=1e-14):
                raise ConfigurationError("quadratic model matrix must be symmetric")
            object.__setattr__(self, "A", 0.5 * (A + A.T))
        else:
            if len(self.coeffs) == 0:
                raise ConfigurationError("zonal polynomial needs at least one coefficient")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.check_positive:
            self._assert_positive()

    # constructors -------------------------------------------------------
    @classmethod
    def affine(cls, params, c0, a, **kw):
        return cls(ModelKind.AFFINE, params, c0=float(c0), a=a, **kw)

    @classmethod
    def quadratic(cls, params, c0, A, **kw):
        return cls(ModelKind.QUADRATIC, params, c0=float(c0), A=A, **kw)

    @classmethod
    def zonal(cls, params, coeffs, **kw):
        return cls(ModelKind.ZONAL_POLY, params, coeffs=tuple(coeffs), **kw)

    @classmethod
    def constant(cls, params, c: float = 1.0):
        return cls.zonal(params, [c])

    def scaled(self, c: float) -> "CurvatureModel":
        if not c > 0:
            raise DomainError("scale factor must be positive")
        if self.kind is ModelKind.AFFINE:
            return CurvatureModel.affine(self.params, c * self.c0, c * self.a)
        if self.kind is ModelKind.QUADRATIC:
            return CurvatureModel.quadratic(self.params, c * self.c0, c * self.A)
        return CurvatureModel.zonal(self.params, [c * k for k in self.coeffs])

    # evaluation ---------------------------------------------------------
    def _assert_positive(self):
        pts = sphere_samples(self.params.n, 10_000, seed=12345)
        vals = self.values(pts)
        extra = np.array([self(north_pole(self.params.n)), self(-north_pole(self.params.n))])
        low = min(vals.min(), extra.min())
        if not low > 0:
            raise DomainError(f"curvature must be positive on the sphere (min sampled value {low:.3g})")

    def values(self, X) -> np.ndarray:
        """K at each row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind is ModelKind.AFFINE:
            return self.c0 + X @ self.a
        if self.kind is ModelKind.QUADRATIC:
            return self.c0 + np.einsum("ij,jk,ik->i", X, self.A, X)
        return np.polynomial.polynomial.polyval(X[:, -1], self.coeffs)

    def __call__(self, x) -> float:
        return float(self.values(np.asarray(x, dtype=float)[None, :])[0])

    def ambient(self, x):
        """(K, ambient gradient, ambient Hessian) of the natural extension to R^(n+1)."""
        x = np.asarray(x, dtype=float)
        dim = x.size
        if self.kind is ModelKind.AFFINE:
            return self.c0 + float(self.a @ x), self.a.copy(), np.zeros((dim, dim))
        if self.kind is ModelKind.QUADRATIC:
            return self.c0 + float(x @ self.A @ x), 2.0 * self.A @ x, 2.0 * self.A
        P = np.polynomial.Polynomial(self.coeffs)
        u = x[-1]
        g = np.zeros(dim)
        g[-1] = P.deriv(1)(u) if P.degree() >= 1 else 0.0
        H = np.zeros((dim, dim))
        H[-1, -1] = P.deriv(2)(u) if P.degree() >= 2 else 0.0
        return float(P(u)), g, H

    @cached_property
    def hessian_scale(self) -> float:
        """Size of the second-order data; sets the degeneracy threshold."""
        if self.kind is ModelKind.AFFINE:
            return float(np.linalg.norm(self.a))
        if self.kind is ModelKind.QUADRATIC:
            return float(2.0 * np.linalg.norm(self.A, 2))
        return float(sum(k * k * abs(c) for k, c in enumerate(self.coeffs)))

    @property
    def tol_degen(self) -> float:
        return 1e-8 * self.hessian_scale

    # zonal view ---------------------------------------------------------
    def zonal_profile(self, axis=None):
        """K as a polynomial in u = <x, axis>, or None if K is not zonal about ``axis``."""
        n = self.params.n
        e = north_pole(n) if axis is None else as_point(axis)
        Poly = np.polynomial.Polynomial
        if self.kind is ModelKind.ZONAL_POLY:
            if abs(abs(e[-1]) - 1.0) > 1e-12:
                return None
            sgn = 1.0 if e[-1] > 0 else -1.0
            return Poly(np.array(self.coeffs) * sgn ** np.arange(len(self.coeffs)))
        if self.kind is ModelKind.AFFINE:
            along = float(self.a @ e)
            if np.linalg.norm(self.a - along * e) > 1e-12:
                return None
            return Poly([self.c0, along])
        # quadratic: zonal iff A = alpha I + beta e e^T
        Ae = self.A @ e
        ee = float(e @ Ae)
        Q = np.eye(e.size) - np.outer(e, e)
        perp = Q @ self.A @ Q
        alpha = np.trace(perp) / (e.size - 1)
        if np.linalg.norm(Ae - ee * e) > 1e-12 or np.linalg.norm(perp - alpha * Q) > 1e-12:
            return None
        return Poly([self.c0 + alpha, 0.0, ee - alpha])

    def is_zonal(self, axis=None) -> bool:
        return self.zonal_profile(axis) is not None

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is ModelKind.ZONAL_POLY:
            d["coeffs"] = list(self.coeffs)
        else:
            d["c0"] = self.c0
            if self.kind is ModelKind.AFFINE:
                d["a"] = self.a.tolist()
            else:
                d["A"] = self.A.tolist()
        return d


def k_star(params: ProblemParams) -> CurvatureModel:
    """K*(x) = 2 + x_{n+1}."""
    return CurvatureModel.affine(params, 2.0, north_pole(params.n))


def eval_grad_hess(K: CurvatureModel, x):
    """(K(x), Riemannian gradient in R^n, Riemannian Hessian n x n) in the frame ``tangent_frame(x)``."""
    x = as_point(x)
    val, g, H = K.ambient(x)
    E = tangent_frame(x)
    grad = E.T @ g
    hess = E.T @ H @ E - float(x @ g) * np.eye(E.shape[1])
    return val, grad, 0.5 * (hess + hess.T)


def riemannian_gradient(K: CurvatureModel, x) -> np.ndarray:
    """Gradient as an ambient vector tangent at x."""
    x = as_point(x)
    _, g, _ = K.ambient(x)
    return g - float(x @ g) * x


def laplacian(K: CurvatureModel, x) -> float:
    return float(np.trace(eval_grad_hess(K, x)[2]))


def exp_map(x, v):
    """Geodesic from x with initial ambient tangent velocity v."""
    s = float(np.linalg.norm(v))
    if s < 1e-300:
        return x.copy()
    y = math.cos(s) * x + math.sin(s) / s * v
    return y / np.linalg.norm(y)


class PointClass(str, Enum):
    KPLUS = "Kplus"
    KMINUS = "Kminus"
    DEGENERATE = "degenerate"


@dataclass(frozen=True, eq=False)
class CriticalPoint:
    location: np.ndarray
    value: float
    grad_norm: float
    hessian_eigs: np.ndarray
    morse_index: int
    laplacian: float
    cls: PointClass
    is_morse: bool = True

    @classmethod
    def synthetic(cls, location, value: float, laplacian: float, morse_index: int, tol: float = 1e-12):
        """Census entry without an underlying model (for constructed test cases)."""
        loc = as_point(location)
        n = loc.size - 1
        if not 0 <= morse_index <= n:
            raise DomainError("Morse index must lie in [0, n]")
        c = PointClass.KMINUS if laplacian < -tol else PointClass.KPLUS if laplacian > tol else PointClass.DEGENERATE
        return cls(loc, float(value), 0.0, np.full(n, np.nan), int(morse_index), float(laplacian), c, True)

    def to_dict(self) -> dict:
        return {
            "location": self.location.tolist(),
            "value": self.value,
            "grad_norm": self.grad_norm,
            "hessian_eigs": [float(e) for e in self.hessian_eigs],
            "morse_index": self.morse_index,
            "laplacian": self.laplacian,
            "class": self.cls.value,
            "is_morse": self.is_morse,
        }


def classify(K: CurvatureModel, x, tol_degen: float | None = None) -> CriticalPoint:
    tol = K.tol_degen if tol_degen is None else tol_degen
    val, grad, hess = eval_grad_hess(K, x)
    eigs = np.linalg.eigvalsh(hess)
    lap = float(np.sum(eigs))
    morse = bool(np.all(np.abs(eigs) > tol))
    c = PointClass.KMINUS if lap < -tol else PointClass.KPLUS if lap > tol else PointClass.DEGENERATE
    return CriticalPoint(
        location=np.asarray(x, dtype=float),
        value=float(val),
        grad_norm=float(np.linalg.norm(grad)),
        hessian_eigs=eigs,
        morse_index=int(np.sum(eigs < 0)),
        laplacian=lap,
        cls=c,
        is_morse=morse,
    )


def _newton_from(K: CurvatureModel, x0, max_iter: int = 60, tol: float = 1e-11, step_cap: float = 0.5):
    x = x0 / np.linalg.norm(x0)
    for _ in range(max_iter):
        _, grad, hess = eval_grad_hess(K, x)
        if np.linalg.norm(grad) <= tol:
            return x
        step = np.linalg.lstsq(hess, -grad, rcond=1e-12)[0]
        size = np.linalg.norm(step)
        if size > step_cap:
            step *= step_cap / size
        x = exp_map(x, tangent_frame(x) @ step)
    _, grad, _ = eval_grad_hess(K, x)
    return x if np.linalg.norm(grad) <= 1e-9 else None


def find_critical_points(
    K: CurvatureModel, multistart: int = 200, seed: int = 0, workers: int = 1, dedupe: float = 1e-6
) -> list[CriticalPoint]:
    """Critical-point census by Riemannian Newton from quasi-uniform starts."""
    if multistart < 50:
        raise ConfigurationError("critical-point search needs at least 50 starts")
    if K.hessian_scale == 0.0:
        raise SearchFailure("K is constant: no isolated critical points")
    starts = sphere_samples(K.params.n, multistart, seed=seed)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ends = list(pool.map(lambda s: _newton_from(K, s), starts))
    else:
        ends = [_newton_from(K, s) for s in starts]
    found = [e for e in ends if e is not None]
    if len(found) < 0.1 * multistart:
        raise SearchFailure(f"Newton converged from only {len(found)} of {multistart} starts")

    distinct: list[np.ndarray] = []
    for x in found:
        if all(geodesic_distance(x, y) > dedupe for y in distinct):
            distinct.append(x)
    if len(distinct) > max(0.5 * len(found), 2 * (K.params.n + 1) ** 2):
        raise SearchFailure("critical set is not isolated")
    census = [classify(K, x) for x in distinct]
    return sorted(census, key=lambda c: c.value)


def euler_sum(census) -> int:
    """sum over critical points of (-1)^index; equals 1 + (-1)^n for Morse K."""
    return int(sum((-1) ** c.morse_index for c in census))
