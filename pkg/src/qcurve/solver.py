"""Zonal spectral Newton solver for P_sigma v = c K v^(n-1-tau), with continuation in tau.

The unknown is the Gegenbauer coefficient vector c of v about the north pole.
The nonlinear term is sampled on the padded rule (2(L+1) nodes) and projected
back to degree L. Each Newton step solves the equivalent preconditioned system

    (I - Lambda^-1 c_pde Proj(p K v^(p-1) .)) dc = -Lambda^-1 R(c)

which is well conditioned even though Lambda grows like l^(n-2).
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import optimize

from .bubbles import Bubble
from .conformal_op import multipliers
from .curvature import CurvatureModel, classify
from .degree import build_M
from .errors import DivergenceError, DomainError, NonConvergenceError, SeedError
from .reduction import balance_heights
from .sphere import ZonalBasis, ZonalField, north_pole, south_pole

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ContinuationState:
    tau: float
    v: ZonalField
    vmax: float
    vmin: float
    peak_u: float
    newton_residual: float
    iterations: int = 0

    @property
    def tau_vmax_sq(self) -> float:
        return self.tau * self.vmax**2

    def row(self) -> dict:
        return {
            "tau": self.tau,
            "vmax": self.vmax,
            "vmin": self.vmin,
            "tau_vmax_sq": self.tau_vmax_sq,
            "residual": self.newton_residual,
        }


class SeedKind(str, Enum):
    CONSTANT = "constant"
    BUBBLE = "bubble"
    TWO_BUBBLE = "two_bubble"


@dataclass(frozen=True)
class Seed:
    kind: SeedKind = SeedKind.CONSTANT
    pole: int = 1  # +1 north, -1 south (single bubble)
    value: float | None = None  # constant seed level; default from K

    @classmethod
    def constant(cls, value=None):
        return cls(SeedKind.CONSTANT, value=value)

    @classmethod
    def bubble(cls, pole: int = 1):
        return cls(SeedKind.BUBBLE, pole=pole)

    @classmethod
    def two_bubble(cls):
        return cls(SeedKind.TWO_BUBBLE)


@dataclass
class Branch:
    states: list = field(default_factory=list)
    seed: Seed = field(default_factory=Seed)
    stopped: str | None = None
    seed_heights: tuple = ()

    def append(self, state: ContinuationState):
        if self.states and not state.tau < self.states[-1].tau:
            raise DomainError("branch states must have strictly decreasing tau")
        self.states.append(state)

    @property
    def taus(self) -> np.ndarray:
        return np.array([s.tau for s in self.states])

    @property
    def vmax(self) -> np.ndarray:
        return np.array([s.vmax for s in self.states])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "vmax", "vmin", "tau_vmax_sq", "residual"])
        for s in self.states:
            r = s.row()
            w.writerow([f"{r[k]:.17g}" for k in ("tau", "vmax", "vmin", "tau_vmax_sq", "residual")])
        return buf.getvalue()


def zonal_K(K: CurvatureModel):
    prof = K.zonal_profile()
    if prof is None:
        raise DomainError("the solver needs K zonal about the north pole")
    return prof


def _peak(v: ZonalField, which: str = "max"):
    """Extreme value of v on [-1, 1] and its location u, refined on the series."""
    u = np.concatenate([[-1.0], v.basis.nodes, [1.0]])
    vals = v(u)
    sgn = 1.0 if which == "max" else -1.0
    j = int(np.argmax(sgn * vals))
    if 0 < j < u.size - 1:
        res = optimize.minimize_scalar(
            lambda x: -sgn * float(v(np.array(x))), bounds=(u[j - 1], u[j + 1]), method="bounded",
            options={"xatol": 1e-14},
        )
        if -res.fun > sgn * vals[j]:
            return float(-sgn * res.fun), float(res.x)
    return float(vals[j]), float(u[j])


def _residual(c, basis, lam, Kpad, p, c_pde):
    vpad = basis.padded_synthesis @ c
    nonlin = c_pde * basis.padded_analysis @ (Kpad * np.abs(vpad) ** p)
    return lam * c - nonlin, vpad


def _sup_relative(R, basis, c_pde, Kpad, vpad, p):
    scale = np.max(np.abs(c_pde * Kpad * vpad**p))
    return float(np.max(np.abs(basis.synthesis @ R)) / scale)


def newton_solve(
    K: CurvatureModel,
    tau: float,
    initial: ZonalField,
    tol: float = 1e-10,
    max_iter: int = 100,
    max_halvings: int = 40,
) -> ContinuationState:
    """Damped Newton for the subcritical equation at fixed tau."""
    params = K.params
    n = params.n
    if not 0 <= tau < n - 2:
        raise DomainError(f"tau must lie in [0, {n - 2})")
    basis = initial.basis
    if np.any(initial.padded_values <= 0) or np.any(initial.values <= 0):
        raise DomainError("initial guess must be strictly positive")
    p = n - 1 - tau
    c_pde = params.c_pde
    lam = multipliers(basis.L, params)
    Kpad = zonal_K(K)(basis.padded_rule.nodes)
    A, B = basis.padded_analysis, basis.padded_synthesis

    c = np.array(initial.coeffs, dtype=float)
    R, vpad = _residual(c, basis, lam, Kpad, p, c_pde)
    res = _sup_relative(R, basis, c_pde, Kpad, vpad, p)
    # merit: the preconditioned residual, for which the Newton step is a descent direction
    merit = np.linalg.norm(R / lam)
    for it in range(max_iter):
        if res <= tol:
            v = initial.with_coeffs(c)
            vmax, u_max = _peak(v, "max")
            vmin, _ = _peak(v, "min")
            return ContinuationState(tau, v, vmax, vmin, u_max, res, it)
        J = np.eye(c.size) - (c_pde / lam)[:, None] * ((A * (p * Kpad * vpad ** (p - 1))) @ B)
        dc = np.linalg.solve(J, -R / lam)
        step, fallback = 1.0, None
        for _ in range(max_halvings + 1):
            trial = c + step * dc
            if np.all(B @ trial > 0) and np.all(basis.synthesis @ trial > 0):
                R_new, vpad_new = _residual(trial, basis, lam, Kpad, p, c_pde)
                merit_new = np.linalg.norm(R_new / lam)
                # either measure decreasing is progress; the sup-relative one lets
                # full Newton steps through near a solution
                if merit_new <= (1.0 - 1e-4 * step) * merit or (
                    _sup_relative(R_new, basis, c_pde, Kpad, vpad_new, p) < res
                ):
                    break
                if fallback is None:
                    fallback = (trial, R_new, vpad_new, merit_new)
            step *= 0.5
        else:
            if fallback is None:
                raise DivergenceError(f"positivity lost at tau = {tau} after {max_halvings} halvings")
            # no decrease along the Newton direction: take the largest positive step and let
            # the iteration budget decide
            trial, R_new, vpad_new, merit_new = fallback
        c, R, vpad, merit = trial, R_new, vpad_new, merit_new
        res = _sup_relative(R, basis, c_pde, Kpad, vpad, p)
    raise NonConvergenceError(f"Newton did not converge in {max_iter} iterations at tau = {tau} (residual {res:.3g})")


def constant_field(basis: ZonalBasis, value: float) -> ZonalField:
    c = np.zeros(basis.L + 1)
    c[0] = value
    return ZonalField(basis, c)


def bubble_seed(K: CurvatureModel, tau: float, basis: ZonalBasis, poles=(1,)):
    """alpha_i delta_{P_i, t_i} with alpha_i = K(P_i)^(-1/2sigma) and balanced heights t_i."""
    params = K.params
    n = params.n
    pts = [north_pole(n) if s > 0 else south_pole(n) for s in poles]
    census = [classify(K, x) for x in pts]
    M = build_M(census, params)
    Kvals = [c.value for c in census]
    _, t, _ = balance_heights(M, Kvals, tau, params)
    alphas = [kv ** (-1.0 / (2 * params.sigma)) for kv in Kvals]

    def f(u):
        return sum(a * Bubble(P, ti, params).of_u(u, s) for a, ti, s, P in zip(alphas, t, poles, pts))

    return ZonalField.from_function(f, basis), tuple(float(x) for x in t)


def _initial(K, seed: Seed, tau, basis):
    n = K.params.n
    if seed.kind is SeedKind.CONSTANT:
        if seed.value is not None:
            level = seed.value
        else:
            kmean = float(np.mean(zonal_K(K)(basis.nodes)))
            level = kmean ** (-1.0 / (n - 2 - tau))
        return constant_field(basis, level), ()
    poles = (seed.pole,) if seed.kind is SeedKind.BUBBLE else (1, -1)
    return bubble_seed(K, tau, basis, poles)


def continue_branch(
    K: CurvatureModel,
    schedule,
    seed: Seed = Seed(),
    L: int = 256,
    max_bisections: int = 6,
    tol: float = 1e-10,
) -> Branch:
    """Warm-started Newton along a decreasing tau schedule.

    When a step fails, intermediate tau values are inserted (bisection, up to
    ``max_bisections`` levels); only scheduled values enter the branch. If a
    scheduled value cannot be reached the branch stops and records why.
    A state whose peak exceeds 0.1 L is not trusted (the truncation no longer
    resolves it; spurious discrete solutions appear there) and also stops the
    branch.
    """
    schedule = [float(x) for x in schedule]
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise DomainError("tau schedule must be strictly decreasing")
    basis = ZonalBasis(K.params, L)
    guess, heights = _initial(K, seed, schedule[0], basis)
    branch = Branch(seed=seed, seed_heights=heights)
    try:
        state = newton_solve(K, schedule[0], guess, tol=tol)
    except (DivergenceError, NonConvergenceError, DomainError) as exc:
        raise SeedError(f"first solve failed: {exc}") from exc
    branch.append(state)

    for target in schedule[1:]:
        try:
            state = _reach(K, state, target, max_bisections, tol)
        except (DivergenceError, NonConvergenceError) as exc:
            branch.stopped = f"tau = {target}: {exc}"
            log.info("branch stopped: %s", branch.stopped)
            break
        if not resolved(state):
            branch.stopped = f"tau = {target}: peak {state.vmax:.4g} not resolved at L = {L}"
            log.info("branch stopped: %s", branch.stopped)
            break
        branch.append(state)
    return branch


def resolved(state: ContinuationState) -> bool:
    return state.vmax <= 0.1 * state.v.basis.L


def resolution_change(K: CurvatureModel, state: ContinuationState, factor: int = 2) -> float:
    """Relative change of vmax when the state is re-solved at factor * L."""
    fine = ZonalBasis(K.params, factor * state.v.basis.L)
    c = np.zeros(fine.L + 1)
    c[: state.v.coeffs.size] = state.v.coeffs
    again = newton_solve(K, state.tau, ZonalField(fine, c))
    return abs(again.vmax - state.vmax) / state.vmax


def _reach(K, state: ContinuationState, target: float, depth: int, tol: float) -> ContinuationState:
    try:
        new = newton_solve(K, target, state.v, tol=tol)
        ratio = new.vmax / state.vmax
        if not 0.5 <= ratio <= 2.0:
            # a warm start that lands this far away has switched branches
            raise NonConvergenceError(f"vmax jumped by a factor {ratio:.3g} between tau = {state.tau} and {target}")
        return new
    except (DivergenceError, NonConvergenceError):
        if depth == 0:
            raise
    mid = 0.5 * (state.tau + target)
    half = _reach(K, state, mid, depth - 1, tol)
    return _reach(K, half, target, depth - 1, tol)


def functional(K: CurvatureModel, tau: float, v: ZonalField) -> float:
    """I_tau(v) = <P v, v>/2 - Gamma(n-1)/(n - tau) int K |v|^(n - tau)."""
    params = K.params
    lam = multipliers(v.basis.L, params)
    quad = 0.5 * params.area_equator * float(np.sum(lam * v.coeffs**2 * v.basis.norms))
    Kpad = zonal_K(K)(v.basis.padded_rule.nodes)
    pot = v.basis.integrate(lambda u: 0.0 * u + Kpad * np.abs(v.padded_values) ** (params.n - tau))
    return quad - params.c_pde / (params.n - tau) * pot


def functional_derivative(K: CurvatureModel, tau: float, v: ZonalField, direction: ZonalField) -> tuple[float, float]:
    """(dI_tau(v)[phi], scale): the derivative along phi and the size of its two competing parts."""
    params = K.params
    lam = multipliers(v.basis.L, params)
    lin = params.area_equator * float(np.sum(lam * v.coeffs * direction.coeffs * v.basis.norms))
    Kpad = zonal_K(K)(v.basis.padded_rule.nodes)
    integrand = Kpad * np.abs(v.padded_values) ** (params.n - 1 - tau) * direction.padded_values
    nonlin = params.c_pde * v.basis.integrate(lambda u: 0.0 * u + integrand)
    return lin - nonlin, max(abs(lin), abs(nonlin))
