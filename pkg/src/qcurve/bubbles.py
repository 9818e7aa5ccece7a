"""Standard bubbles delta_{P,t}, their derivatives, and the integral ledger.

delta_{P,t}(x) = t / (1 + (t^2 - 1)/2 * (1 - cos d(x, P))) solves
P_sigma v = Gamma(n-1) v^(n-1); in the stereographic chart centred at P it
becomes H(y) * delta = 2t / (1 + t^2 |y|^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import specfun
from .conformal_op import apply_P, multipliers
from .errors import AccuracyError, DomainError, LedgerFailure
from .sphere import ProblemParams, ZonalBasis, ZonalField, as_point, geodesic_distance


@dataclass(frozen=True, eq=False)
class Bubble:
    P: np.ndarray
    t: float
    params: ProblemParams

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError("bubble height t must be positive")
        object.__setattr__(self, "P", as_point(self.P))

    def profile(self, w):
        """delta as a function of w = 1 - cos d(x, P)."""
        return self.t / (1.0 + 0.5 * (self.t**2 - 1.0) * w)

    def of_u(self, u, sign: float = 1.0):
        """delta at points with <x, axis> = u, for P = sign * axis."""
        return self.profile(1.0 - sign * np.asarray(u, dtype=float))


def eval_bubble(b: Bubble, x) -> float:
    x = as_point(x)
    d = x - b.P
    return float(b.profile(0.5 * float(d @ d)))


def derivatives(b: Bubble, x):
    """(d delta / dt, d delta / dP) at x.

    The P-derivative is returned as an ambient vector in the tangent space at P.
    """
    x = as_point(x)
    t = b.t
    w = 0.5 * float((x - b.P) @ (x - b.P))
    D = 1.0 + 0.5 * (t * t - 1.0) * w
    d_t = (1.0 - 0.5 * (t * t + 1.0) * w) / D**2
    tangential = x - float(x @ b.P) * b.P
    d_P = t * (t * t - 1.0) / (2.0 * D**2) * tangential
    return d_t, d_P


def bubble_field(b: Bubble, basis: ZonalBasis, axis=None) -> ZonalField:
    """Zonal representation of delta_{P,t} about ``axis`` (default P); P must be +-axis."""
    axis = b.P if axis is None else as_point(axis)
    sign = float(np.dot(axis, b.P))
    if abs(abs(sign) - 1.0) > 1e-12:
        raise DomainError("bubble centre must lie on the zonal axis")
    return ZonalField.from_function(lambda u: b.of_u(u, np.sign(sign)), basis, axis)


def pde_residual(b: Bubble, L: int = 256) -> float:
    """sup |P delta - Gamma(n-1) delta^(n-1)| / sup |Gamma(n-1) delta^(n-1)| at collocation nodes."""
    if b.t > 0.15 * L and b.t != 1.0:
        raise AccuracyError(f"t = {b.t} is not resolved at truncation L = {L}")
    basis = ZonalBasis(b.params, L)
    field = bubble_field(b, basis).chopped()
    lhs = apply_P(field).values
    rhs = b.params.c_pde * b.of_u(basis.nodes) ** (b.params.n - 1)
    return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))


def self_energy_closed_form(params: ProblemParams) -> float:
    n = params.n
    return 2.0 ** (n - 1) * params.area_equator * specfun.beta(n / 2, n / 2)


def self_energy(b: Bubble, L: int = 256, axis=None) -> float:
    """<delta, delta> = int (P_sigma delta) delta, evaluated spectrally."""
    basis = ZonalBasis(b.params, L)
    c = bubble_field(b, basis, axis).coeffs
    lam = multipliers(L, b.params)
    return float(b.params.area_equator * np.sum(lam * c * c * basis.norms))


def conformal_mass(b: Bubble, N: int = 2000) -> float:
    """int_{S^n} delta^n dvol (independent of t)."""
    rule = specfun.make_rule("jacobi_sphere", N, b.params.n)
    return b.params.area_equator * rule.integrate(lambda u: b.of_u(u) ** b.params.n)


# --------------------------------------------------------------------------
# two-bubble integrals


def _panel_rule(edges, order: int = 16):
    x, w = special.roots_legendre(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def two_axis_integral(g, gamma: float, n: int, panels: int = 96, order: int = 16) -> float:
    """int_{S^n} g(w1, w2) dvol with w_i = 1 - cos d(x, P_i) and d(P1, P2) = gamma.

    Polar angle theta about P1 is parametrised by s = log tan(theta/2), so
    concentration near P1 (s -> -inf) and its antipode (s -> +inf) is resolved
    on a uniform grid; the azimuth phi is graded towards the direction of P2.
    """
    s_nodes, s_w = _panel_rule(np.linspace(-18.0, 18.0, panels + 1), order)
    theta = 2.0 * np.arctan(np.exp(s_nodes))
    sin_t = np.sin(theta)
    w_theta = s_w * sin_t * sin_t ** (n - 1)  # d theta = sin(theta) ds

    phi_edges = np.concatenate([[0.0], np.pi * np.geomspace(1e-6, 1.0, 40)])
    phi, phi_w = _panel_rule(phi_edges, order)
    w_phi = phi_w * np.sin(phi) ** (n - 2)

    T, F = np.meshgrid(theta, phi, indexing="ij")
    w1 = 2.0 * np.sin(0.5 * T) ** 2
    x0, x1, xr = np.cos(T), np.sin(T) * np.cos(F), np.sin(T) * np.sin(F)
    w2 = 0.5 * ((x0 - math.cos(gamma)) ** 2 + (x1 - math.sin(gamma)) ** 2 + xr**2)
    vals = g(w1, w2)
    return float(specfun.sphere_area(n - 2) * (w_theta @ vals @ w_phi))


def interaction(b1: Bubble, b2: Bubble, a: float, b: float) -> float:
    """int_{S^n} delta_1^a delta_2^b dvol."""
    if b1.params != b2.params:
        raise DomainError("bubbles live in different dimensions")
    gamma = geodesic_distance(b1.P, b2.P)
    if gamma < 0.1:
        raise DomainError("bubble centres closer than 0.1; interaction estimate not valid")
    return two_axis_integral(lambda w1, w2: b1.profile(w1) ** a * b2.profile(w2) ** b, gamma, b1.params.n)


def flat_integral(params: ProblemParams, p: float) -> float:
    """int_{R^n} (1 + |x|^2)^(-p) = |S^(n-1)|/2 * B(n/2, p - n/2)."""
    n = params.n
    return 0.5 * params.area_equator * specfun.beta(n / 2, p - n / 2)


def interaction_leading(b1: Bubble, b2: Bubble) -> float:
    """Leading term 2^(n+1) (int (1+|x|^2)^(1-n)) G(P1, P2) / (t1 t2) of int delta_1^(n-1) delta_2."""
    from .conformal_op import green_G

    n = b1.params.n
    return 2.0 ** (n + 1) * flat_integral(b1.params, n - 1) * green_G(b1.P, b2.P) / (b1.t * b2.t)


# --------------------------------------------------------------------------
# ledger


def _ledger_entry(name, computed, closed):
    return {
        "identity": name,
        "computed": float(computed),
        "closed_form": float(closed),
        "rel_error": abs(computed - closed) / abs(closed),
    }


def radial_ledger(params: ProblemParams, N: int = 400, tol: float = 1e-9) -> list[dict]:
    """Verify the three radial integrals of (1+|x|^2)^(-n) by compactified quadrature."""
    n = params.n
    rule = specfun.make_rule("radial_halfline", N, n)
    B = specfun.beta(n / 2, n / 2 - 1)
    S = params.area_equator
    base = (1.0 + rule.nodes**2) ** (-n)
    i0 = float(rule.weights @ base)
    i2 = float(rule.weights @ (rule.nodes**2 * base))
    idiff = float(rule.weights @ ((rule.nodes**2 - 1.0) * base))
    report = [
        _ledger_entry("int (1+|x|^2)^-n", i0, (n - 2) * S / (4 * (n - 1)) * B),
        _ledger_entry("int |x|^2 (1+|x|^2)^-n", i2, n * S / (4 * (n - 1)) * B),
        _ledger_entry("int (|x|^2-1) (1+|x|^2)^-n", idiff, S / (2 * (n - 1)) * B),
    ]
    report.append(
        {
            "identity": "difference consistency",
            "computed": idiff,
            "closed_form": i2 - i0,
            "rel_error": abs(idiff - (i2 - i0)) / abs(idiff),
        }
    )
    failed = [e["identity"] for e in report if e["rel_error"] > tol]
    if failed:
        raise LedgerFailure(f"radial identities failed: {failed}", failed)
    return report


# Each inequality is (name, lhs(a, b, alpha), rhs(a, b, alpha), alpha range, b may be negative).
def _b1_lhs(a, b, al):
    s = a + b
    return np.abs(np.abs(s) ** (al - 1) * s - a**al - al * a ** (al - 1) * b - 0.5 * al * (al - 1) * a ** (al - 2) * b * b)


def _b1_rhs(a, b, al):
    g = np.maximum(0.0, al - 3.0)
    return np.abs(b) ** al + a**g * np.abs(b) ** (al - g)


INEQUALITIES = {
    "taylor_remainder": (_b1_lhs, _b1_rhs, (2.0, 6.0), True),
    "second_order": (
        lambda a, b, al: np.abs((a + b) ** al - a**al - b**al - al * a ** (al - 1) * b),
        lambda a, b, al: a ** (al - 2) * b * b,
        (2.0, 3.0),
        False,
    ),
    "cross_terms": (
        lambda a, b, al: np.abs((a + b) ** al - a**al - b**al),
        lambda a, b, al: np.abs(a ** (al - 1) * b + a * b ** (al - 1)),
        (2.0, 3.0),
        False,
    ),
    "low_power": (
        lambda a, b, al: np.abs((a + b) ** al - a**al),
        lambda a, b, al: a ** (al - 1) * b + b**al,
        (1.0, 2.0),
        False,
    ),
}


def empirical_constant(name: str, a, b, alpha) -> float:
    """Smallest C with lhs <= C rhs on the given samples (rhs > 0 only)."""
    lhs_f, rhs_f, _, _ = INEQUALITIES[name]
    a, b, alpha = (np.asarray(v, dtype=float) for v in (a, b, alpha))
    lhs, rhs = lhs_f(a, b, alpha), rhs_f(a, b, alpha)
    mask = rhs > 0
    if np.any(lhs[~mask] > 0):
        return math.inf
    return float(np.max(lhs[mask] / rhs[mask])) if np.any(mask) else 0.0


def _samples(rng, count, alpha_range, signed):
    # both sides are homogeneous of degree alpha, so sampling the direction of (a, b) suffices
    angle = rng.uniform(-math.pi / 2 if signed else 0.0, math.pi / 2, count)
    a, b = np.cos(angle), np.sin(angle)
    alpha = rng.uniform(*alpha_range, count)
    return a, b, alpha


def inequality_suite(samples: int = 20000, seed: int = 0) -> list[dict]:
    """Empirical constants for the elementary power inequalities and their stability."""
    if samples < 10_000:
        raise DomainError("inequality suite needs at least 1e4 samples")
    report = []
    for name, (_, _, alpha_range, signed) in INEQUALITIES.items():
        rng = np.random.default_rng(seed)
        a, b, al = _samples(rng, 2 * samples, alpha_range, signed)
        c_half = empirical_constant(name, a[:samples], b[:samples], al[:samples])
        c_full = empirical_constant(name, a, b, al)
        stable = math.isfinite(c_full) and (c_full == 0.0 or abs(c_full - c_half) <= 0.1 * c_full)
        report.append({"inequality": name, "C": c_full, "C_half": c_half, "stable": bool(stable)})
    bad = [r["inequality"] for r in report if not r["stable"]]
    if bad:
        raise LedgerFailure(f"unstable empirical constants: {bad}", bad)
    return report
