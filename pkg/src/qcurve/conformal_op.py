"""The intertwining operator P_sigma, its inverse, and the Green/Riesz kernels.

P_sigma acts on degree-l spherical harmonics by
Gamma(l + n/2 + sigma) / Gamma(l + n/2 - sigma); with n - 2 sigma = 2 this is
the integer product (l+1)(l+2)...(l+n-2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from . import specfun
from .errors import AccuracyError, SingularityError
from .sphere import ProblemParams, ZonalField, as_point, chordal_sq


def multiplier(l: int, params: ProblemParams) -> float:
    n, s = params.n, params.sigma
    return math.exp(specfun.log_gamma(l + n / 2 + s) - specfun.log_gamma(l + n / 2 - s))


def multipliers(L: int, params: ProblemParams) -> np.ndarray:
    n, s = params.n, params.sigma
    l = np.arange(L + 1, dtype=float)
    return np.exp(special.gammaln(l + n / 2 + s) - special.gammaln(l + n / 2 - s))


@dataclass(frozen=True, eq=False)
class SpectralMultiplier:
    params: ProblemParams
    values: np.ndarray

    @classmethod
    def build(cls, params: ProblemParams, L: int) -> "SpectralMultiplier":
        vals = multipliers(L, params)
        vals.setflags(write=False)
        return cls(params, vals)


@lru_cache(maxsize=32)
def _multiplier_cached(params: ProblemParams, L: int) -> np.ndarray:
    return SpectralMultiplier.build(params, L).values


def apply_P(v: ZonalField) -> ZonalField:
    return v.with_coeffs(v.coeffs * _multiplier_cached(v.params, v.basis.L))


def apply_P_inverse(f: ZonalField) -> ZonalField:
    return f.with_coeffs(f.coeffs / _multiplier_cached(f.params, f.basis.L))


def sigma_inner(u: ZonalField, v: ZonalField) -> float:
    """<u, v> = int (P_sigma u) v."""
    return apply_P(u).inner(v)


def green_G(p, q) -> float:
    """Green's function 1 / (1 - cos d(p, q)) = 2 / |p - q|^2."""
    c2 = chordal_sq(as_point(p), as_point(q))
    if c2 <= 1e-24:
        raise SingularityError("Green's function evaluated at coincident points")
    return 2.0 / c2


def riesz_kernel(p, q, params: ProblemParams) -> float:
    """c_{n,sigma} / |p - q|^(n - 2 sigma), with n - 2 sigma = 2."""
    c2 = chordal_sq(as_point(p), as_point(q))
    if c2 <= 1e-24:
        raise SingularityError("Riesz kernel evaluated at coincident points")
    return params.c_green / c2


def funk_hecke_coefficients(params: ProblemParams, L: int, N: int | None = None) -> np.ndarray:
    """Eigenvalues of the spherical Riesz potential on degree-l zonal harmonics.

    mu_l = |S^(n-1)| c_{n,sigma} / 2 * int C_l(s)/C_l(1) (1-s)^((n-4)/2) (1+s)^((n-2)/2) ds,
    obtained by Gauss-Jacobi quadrature of the kernel itself; the kernel's
    1/(1-s) singularity is absorbed into the Jacobi weight.
    """
    n = params.n
    N = N or (L + 2)
    s, w = special.roots_jacobi(N, (n - 4) / 2.0, (n - 2) / 2.0)
    table = specfun.gegenbauer_table(L, params.lam, s)
    at_one = specfun.gegenbauer_table(L, params.lam, np.array(1.0))
    integrals = (table @ w) / at_one
    return 0.5 * params.area_equator * params.c_green * integrals


def riesz_apply(f: ZonalField, check: bool = True, tol: float = 1e-5) -> ZonalField:
    """Spherical Riesz potential c_{n,sigma} int f(zeta) / |xi - zeta|^2 dzeta."""
    L = f.basis.L
    mu = funk_hecke_coefficients(f.params, L)
    if check:
        mu2 = funk_hecke_coefficients(f.params, L, 2 * (L + 2))
        out1, out2 = f.coeffs * mu, f.coeffs * mu2
        scale = max(np.max(np.abs(f.with_coeffs(out2).values)), 1e-300)
        if np.max(np.abs(f.with_coeffs(out1 - out2).values)) > tol * scale:
            raise AccuracyError("Riesz quadrature did not converge under node doubling")
    return f.with_coeffs(f.coeffs * mu)


def riesz_direct(g, xi_u: float, params: ProblemParams, n_theta: int = 160, n_phi: int = 64) -> float:
    """Direct quadrature of c_{n,sigma} int g(<zeta, e>) / |xi - zeta|^2 dzeta.

    ``g`` is a function of u = <zeta, e> for a fixed axis e, and xi is any point
    with <xi, e> = xi_u. Polar coordinates are centred at xi, so the kernel
    singularity is absorbed into a Jacobi weight in the polar angle; the
    azimuthal angle (measured in the plane of e and xi) carries a Gegenbauer
    weight. This path is independent of the spectral multipliers.
    """
    n = params.n
    cg = math.sqrt(max(0.0, 1.0 - xi_u * xi_u))
    s, ws = special.roots_jacobi(n_theta, (n - 4) / 2.0, (n - 2) / 2.0)  # s = cos(polar angle)
    c, wc = special.roots_jacobi(n_phi, (n - 3) / 2.0, (n - 3) / 2.0)  # c = cos(azimuth)
    S, C = np.meshgrid(s, c, indexing="ij")
    sin_s = np.sqrt(np.clip(1.0 - S * S, 0.0, None))
    u = np.clip(S * xi_u + sin_s * C * cg, -1.0, 1.0)
    vals = g(u)
    total = float(ws @ vals @ wc)
    # |xi - zeta|^2 = 2 (1 - s); measure (1-s^2)^((n-2)/2) ds (1-c^2)^((n-3)/2) dc |S^(n-2)|
    return params.c_green * 0.5 * specfun.sphere_area(n - 2) * total
