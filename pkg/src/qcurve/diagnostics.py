"""Blow-up diagnostics for solver output.

All peak analysis happens in the stereographic chart centred at a pole,
where a zonal state v becomes the radial function u(r) = H(r) v(cos theta),
H = 2/(1+r^2), theta = 2 arctan r.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from . import specfun
from .curvature import CurvatureModel, classify
from .degree import build_M
from .errors import DomainError, ProfileMismatchError
from .reduction import mu_target_single
from .solver import Branch, ContinuationState, zonal_K
from .sphere import ProblemParams, ZonalField, north_pole


def state_from_field(v: ZonalField, tau: float = 0.0) -> ContinuationState:
    """Wrap a field (e.g. an exact bubble) as a state so the diagnostics can read it."""
    u = np.concatenate([[-1.0], v.basis.nodes, [1.0]])
    vals = v(u)
    j = int(np.argmax(vals))
    return ContinuationState(tau, v, float(vals[j]), float(vals.min()), float(u[j]), 0.0)


def chart_profile(v: ZonalField, pole: int = 1):
    """r -> H(r) v(F(r)) in the chart centred at the pole sign*e_{n+1}."""

    def u_of_r(r):
        r = np.asarray(r, dtype=float)
        cos_t = (1.0 - r * r) / (1.0 + r * r)
        return 2.0 / (1.0 + r * r) * v(pole * cos_t)

    return u_of_r


def peak_height(state: ContinuationState, pole: int = 1) -> float:
    """m = u(0) in the flat chart, i.e. 2 v(pole)."""
    return 2.0 * float(state.v(np.array(float(pole))))


def exponent(params: ProblemParams, tau: float) -> float:
    return params.n - 1 - tau


# --------------------------------------------------------------------------
# isolated simple blow-up


@dataclass(frozen=True)
class PeakClassification:
    applicable: bool
    isolated_simple: bool | None = None
    critical_points: int | None = None
    c_bar: float | None = None
    height: float | None = None
    note: str = ""


def classify_peak(
    state, pole: int = 1, rho: float = 0.5, threshold: float = 10.0, samples: int = 4000
) -> PeakClassification:
    """Count interior critical points of w(r) = r^(2 sigma/(p-1)) u(r) on (0, rho).

    ``state`` may be a ContinuationState or a Branch (its last state is used).
    Also reports C_bar = sup_{r < rho} w(r), the constant of the pointwise
    upper bound u(y) <= C_bar |y|^(-2 sigma/(p-1)).
    """
    if isinstance(state, Branch):
        state = state.states[-1]
    m = peak_height(state, pole)
    if m < threshold:
        return PeakClassification(False, height=m, note=f"peak height {m:.3g} below {threshold}")
    params = state.v.params
    p = exponent(params, state.tau)
    # geometric grid: the interesting structure sits at r ~ 1/m
    r = np.geomspace(1e-4 / m, rho, samples)
    w = r ** (2 * params.sigma / (p - 1)) * chart_profile(state.v, pole)(r)
    dw = np.diff(w)
    scale = np.max(np.abs(w))
    signs = np.sign(np.where(np.abs(dw) > 1e-13 * scale, dw, 0.0))
    signs = signs[signs != 0]
    crit = int(np.sum(signs[1:] != signs[:-1]))
    return PeakClassification(True, crit == 1, crit, float(w.max()), m)


# --------------------------------------------------------------------------
# mu and lambda


def richardson_order1(taus, values):
    """Linear extrapolation to tau = 0 from the last two points."""
    t1, t2 = taus[-2], taus[-1]
    y1, y2 = values[-2], values[-1]
    return (t1 * y2 - t2 * y1) / (t1 - t2)


@dataclass
class MuLambdaReport:
    poles: list
    raw: list  # per pole: tau * v(pole)^2 over the tail
    estimates: list
    targets: list
    lambdas: list = field(default_factory=list)
    height_ratios: list = field(default_factory=list)
    system_residual: float | None = None
    consistency: list = field(default_factory=list)
    monotone: bool = True

    def relative_errors(self):
        return [abs(e - t) / abs(t) for e, t in zip(self.estimates, self.targets)]


def _tail_values(branch: Branch, pole: int, tail: int):
    states = branch.states[-tail:]
    taus = np.array([s.tau for s in states])
    vals = np.array([s.tau * float(s.v(np.array(float(pole)))) ** 2 for s in states])
    heights = np.array([float(s.v(np.array(float(pole)))) for s in states])
    return taus, vals, heights


def mu_lambda_check(branch: Branch, K: CurvatureModel, poles=(1,), tail: int = 3) -> MuLambdaReport:
    """Extrapolate tau v(q)^2 to tau = 0 and compare with the interaction-matrix prediction."""
    if len(branch.states) < tail or tail < 3:
        raise DomainError(f"need at least {max(tail, 3)} states on the branch")
    params = K.params
    n, sigma = params.n, params.sigma
    pts = [north_pole(n) * s for s in poles]
    census = [classify(K, x) for x in pts]
    raw, est, cons, heights = [], [], [], []
    monotone = True
    for pole in poles:
        taus, vals, h = _tail_values(branch, pole, tail)
        raw.append(vals.tolist())
        heights.append(h)
        if not (np.all(np.diff(vals) >= 0) or np.all(np.diff(vals) <= 0)):
            monotone = False
            warnings.warn("tail of tau v^2 is not monotone; extrapolation is unreliable", RuntimeWarning)
        est.append(float(richardson_order1(taus, vals)))
        cons.append(float(richardson_order1(taus[:-1], vals[:-1])))
    if len(poles) == 1:
        c = census[0]
        targets = [mu_target_single(c.laplacian, c.value, sigma, n)]
        return MuLambdaReport(list(poles), raw, est, targets, consistency=cons, monotone=monotone)

    M = build_M(census, params).entries
    Kv = np.array([c.value for c in census])
    last = np.array([hh[-1] for hh in heights])
    lam = Kv ** (-1 / (2 * sigma)) * last[0] / last
    rhs = 0.5 * sigma * lam * np.array(est)
    resid = float(np.linalg.norm(M.T @ lam - rhs) / np.linalg.norm(rhs))
    # the interaction system determines mu only jointly; report the diagonal balance as target
    targets = [float((M.T @ lam)[j] / (0.5 * sigma * lam[j])) for j in range(len(poles))]
    return MuLambdaReport(
        list(poles), raw, est, targets, lam.tolist(), (last[0] / last).tolist(), resid, cons, monotone
    )


# --------------------------------------------------------------------------
# Pohozaev identity for radial solutions of the flat integral equation


def _outer_rule(R: float, N: int):
    # s = R / w maps (0, 1] onto [R, inf)
    w, wt = special.roots_legendre(N)
    w = 0.5 * (w + 1.0)
    wt = 0.5 * wt
    return R / w, wt * R / w**2


def _inner_rule(R: float, N: int):
    x, wt = special.roots_legendre(N)
    return 0.5 * R * (x + 1.0), 0.5 * R * wt


def _sphere_mean_inv_sq(r, s, n):
    """Mean of |x - y|^-2 over |y| = s for |x| = r < s, and its r-derivative."""
    z = (r / s) ** 2
    a, b, c = 1.0, 2.0 - n / 2.0, n / 2.0
    mean = special.hyp2f1(a, b, c, z) / s**2
    dmean = (a * b / c) * special.hyp2f1(a + 1, b + 1, c + 1, z) * 2.0 * r / s**4
    return mean, dmean


@dataclass(frozen=True)
class PohozaevResult:
    lhs: float
    rhs: float
    residual: float
    terms: dict


def pohozaev_residual(u, K_flat, R: float, p: float, params: ProblemParams, N: int = 64) -> PohozaevResult:
    """Both sides of the Pohozaev identity on B_R for u = int_{B_R} K u^p/|x-y|^2 + h_R.

    ``u`` is a radial function of r; ``K_flat`` is a constant or a pair
    (K(r), K'(r)). The residual is normalised by the largest individual term
    because for p = n-1 and constant K the left side vanishes identically.
    """
    n = params.n
    if u(3.0 * R) > 0.5 * u(0.0):
        raise DomainError("u does not decay on [0, 3R]")
    if isinstance(K_flat, tuple):
        Kf, dKf = K_flat
    else:
        Kc = float(K_flat)
        Kf, dKf = (lambda r: Kc + 0.0 * r), (lambda r: 0.0 * r)
    S = params.area_equator
    ri, wi = _inner_rule(R, N)
    so, wo = _outer_rule(R, N)
    wi_vol = wi * S * ri ** (n - 1)
    wo_vol = wo * S * so ** (n - 1)

    mean, dmean = _sphere_mean_inv_sq(ri[:, None], so[None, :], n)
    src = Kf(so) * u(so) ** p * wo_vol
    h = mean @ src
    dh = dmean @ src

    Ku_p = Kf(ri) * u(ri) ** p
    I_main = float(wi_vol @ (Kf(ri) * u(ri) ** (p + 1)))
    I_grad = float(wi_vol @ (ri * dKf(ri) * u(ri) ** (p + 1)))
    c_first = (n - 2 * params.sigma) / 2.0 - n / (p + 1.0)
    t_h = float(wi_vol @ (Ku_p * h))
    t_dh = float(wi_vol @ (ri * dh * Ku_p))
    t_bd = R / (p + 1.0) * float(Kf(np.array(R)) * u(np.array(R)) ** (p + 1)) * S * R ** (n - 1)

    terms = {
        "volume": c_first * I_main,
        "gradient": -I_grad / (p + 1.0),
        "h": (n - 2 * params.sigma) / 2.0 * t_h,
        "x_grad_h": t_dh,
        "boundary": -t_bd,
    }
    lhs = terms["volume"] + terms["gradient"]
    rhs = terms["h"] + terms["x_grad_h"] + terms["boundary"]
    scale = max(max(abs(v) for v in terms.values()), 1e-300)
    return PohozaevResult(lhs, rhs, abs(lhs - rhs) / scale, terms)


def chart_curvature(K: CurvatureModel, tau: float, pole: int = 1):
    """(K_flat(r), K_flat'(r)) for the chart image of a state.

    u = H v(F) turns P v = c K v^p into u = int K_flat u^p / |x - y|^2 with
    K_flat = c_{n,sigma} Gamma(n-1) K(F(r)) H(r)^tau; the H^tau factor is what
    remains of conformal covariance once p < n - 1.
    """
    params = K.params
    c = params.c_green * params.c_pde
    Kz = zonal_K(K)
    dKz = Kz.deriv()

    def Kf(r):
        r = np.asarray(r, dtype=float)
        H = 2.0 / (1.0 + r * r)
        return c * Kz(pole * (1.0 - r * r) / (1.0 + r * r)) * H**tau

    def dKf(r):
        r = np.asarray(r, dtype=float)
        H = 2.0 / (1.0 + r * r)
        dH = -4.0 * r / (1.0 + r * r) ** 2  # also d cos(theta)/dr
        u = pole * (1.0 - r * r) / (1.0 + r * r)
        return c * (dKz(u) * pole * dH * H**tau + Kz(u) * tau * H ** (tau - 1.0) * dH)

    return Kf, dKf


def state_pohozaev(state: ContinuationState, K: CurvatureModel, pole: int = 1, R: float = 1.0, N: int = 64) -> PohozaevResult:
    """Pohozaev identity on the ball of radius R around a peak of a converged state."""
    return pohozaev_residual(
        chart_profile(state.v, pole), chart_curvature(K, state.tau, pole), R, exponent(K.params, state.tau), K.params, N
    )


def flat_bubble(t: float = 1.0):
    """omega_t(r) = 2t/(1 + t^2 r^2), the chart image of the standard bubble."""
    return lambda r: 2.0 * t / (1.0 + t * t * np.asarray(r, dtype=float) ** 2)


def integral_equation_constant(params: ProblemParams) -> float:
    """c_{n,sigma} Gamma(n-1), the constant K for which the flat bubble solves the integral equation."""
    return params.c_green / params.green_fault * params.c_pde


def integral_form_residual(state: ContinuationState, K: CurvatureModel) -> float:
    """sup |v - Riesz(c K v^p)| / sup v: the Green-representation form of the equation."""
    from .conformal_op import riesz_apply

    params = K.params
    v = state.v
    Kpad = zonal_K(K)(v.basis.padded_rule.nodes)
    src = params.c_pde * Kpad * v.padded_values ** exponent(params, state.tau)
    f = ZonalField(v.basis, v.basis.padded_analysis @ src, v.pole)
    w = riesz_apply(f)
    return float(np.max(np.abs(w.values - v.values)) / np.max(np.abs(v.values)))


# --------------------------------------------------------------------------
# Kazdan-Warner


def kazdan_warner_residual(state: ContinuationState, K: CurvatureModel) -> float:
    """int K'(u)(1-u^2) v^n / int |K'(u)| sqrt(1-u^2) v^n  (X = gradient of x_{n+1})."""
    n = K.params.n
    dK = zonal_K(K).deriv()
    rule = state.v.basis.padded_rule
    u = rule.nodes
    v = state.v.padded_values
    num = float(rule.weights @ (dK(u) * (1.0 - u * u) * v**n))
    den = float(rule.weights @ (np.abs(dK(u)) * np.sqrt(1.0 - u * u) * v**n))
    return 0.0 if den == 0.0 else num / den


# --------------------------------------------------------------------------
# profile


@dataclass(frozen=True)
class ProfileFit:
    k_fit: float
    k_target: float
    deviation: float
    fit_residual: float
    height: float


def profile_check(
    state: ContinuationState, K: CurvatureModel, pole: int = 1, s_max: float = 3.0, samples: int = 200
) -> ProfileFit:
    """Fit m^-1 u(m^-((p-1)/2sigma) s) by 1/(1+k s^2) and compare k with K(q)^(1/sigma)/4."""
    params = K.params
    sigma = params.sigma
    m = peak_height(state, pole)
    if m < 10.0:
        raise DomainError(f"peak height {m:.3g} below 10; profile is not applicable")
    p = exponent(params, state.tau)
    s = np.linspace(0.0, s_max, samples)
    U = chart_profile(state.v, pole)(m ** (-(p - 1) / (2 * sigma)) * s) / m
    model = lambda s, k: (1.0 + k * s * s) ** ((2 * sigma - params.n) / 2.0)
    (k_fit,), _ = optimize.curve_fit(model, s, U, p0=[0.25])
    fit_res = float(np.max(np.abs(U - model(s, k_fit))))
    if fit_res > 0.1:
        raise ProfileMismatchError(f"rescaled peak deviates from the standard profile by {fit_res:.3g}")
    q = north_pole(params.n) * pole
    k_target = K(q) ** (1.0 / sigma) / 4.0
    return ProfileFit(float(k_fit), k_target, abs(k_fit - k_target) / k_target, fit_res, m)


def limit_constant_a(params: ProblemParams) -> float:
    """a = 2 c_{n,sigma} c(n,sigma) |S^(n-1)| B(sigma, n/2)."""
    c_green = params.c_green / params.green_fault
    return 2.0 * c_green * params.c_pde * params.area_equator * specfun.beta(params.sigma, params.n / 2)


def ansatz_distance(state: ContinuationState, K: CurvatureModel, poles=(1,)) -> dict:
    """H^sigma distance from the state to the balanced bubble ansatz at the same tau.

    Reported next to tau |log tau|, the order of the expected correction.
    """
    from .conformal_op import sigma_inner
    from .solver import bubble_seed

    ansatz, heights = bubble_seed(K, state.tau, state.v.basis, poles)
    diff = state.v.with_coeffs(state.v.coeffs - ansatz.coeffs)
    dist = math.sqrt(max(sigma_inner(diff, diff), 0.0))
    scale = state.tau * abs(math.log(state.tau))
    return {"distance": dist, "tau_log_tau": scale, "ratio": dist / scale, "heights": heights}


# --------------------------------------------------------------------------
# report


@dataclass
class BlowupReport:
    peaks: list
    mu_estimates: list
    mu_targets: list
    lambda_ratios: list
    isolated_simple: list
    pohozaev_residual: float | None
    kw_residual: float
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "peaks": self.peaks,
            "mu_estimates": self.mu_estimates,
            "mu_targets": self.mu_targets,
            "lambda_ratios": self.lambda_ratios,
            "isolated_simple": self.isolated_simple,
            "pohozaev_residual": self.pohozaev_residual,
            "kw_residual": self.kw_residual,
            **self.extras,
        }


def blowup_report(branch: Branch, K: CurvatureModel, threshold: float = 10.0) -> BlowupReport:
    """Assemble the diagnostics for a branch; empty peak list when nothing concentrates."""
    params = K.params
    last = branch.states[-1]
    kw = kazdan_warner_residual(last, K)
    peaks = []
    for pole in (1, -1):
        cls = classify_peak(last, pole, threshold=threshold)
        if cls.applicable:
            q = north_pole(params.n) * pole
            peaks.append({"pole": pole, "location": q.tolist(), "height": cls.height,
                          "critical_point": q.tolist(), "gap": 0.0, "c_bar": cls.c_bar,
                          "isolated_simple": cls.isolated_simple})
    report = BlowupReport(peaks, [], [], [], [p["isolated_simple"] for p in peaks], None, kw)
    report.extras["limit_constant_a"] = limit_constant_a(params)
    report.extras["integral_form_residual"] = integral_form_residual(last, K)
    if not peaks:
        return report
    poles = tuple(p["pole"] for p in peaks)
    report.pohozaev_residual = max(state_pohozaev(last, K, pole).residual for pole in poles)
    if len(branch.states) < 3:
        return report
    ml = mu_lambda_check(branch, K, poles)
    report.mu_estimates = ml.estimates
    report.mu_targets = ml.targets
    report.lambda_ratios = ml.lambdas
    report.extras["mu_raw"] = ml.raw
    report.extras["mu_consistency"] = ml.consistency
    report.extras["system_residual"] = ml.system_residual
    try:
        fits = [profile_check(last, K, pole) for pole in poles]
        report.extras["profile"] = [{"k_fit": f.k_fit, "k_target": f.k_target, "deviation": f.deviation} for f in fits]
    except (ProfileMismatchError, DomainError) as exc:
        report.extras["profile"] = str(exc)
    return report
