"""Acceptance checks, one per criterion, each printing a single PASS/FAIL line.

The lines bypass output capture, so they show under plain ``pytest`` too.
"""

import itertools
import math
import sys
import time

import numpy as np
import pytest

from qcurve.bubbles import (
    Bubble,
    bubble_field,
    interaction,
    interaction_leading,
    pde_residual,
    radial_ledger,
    self_energy,
)
from qcurve.conformal_op import multiplier
from qcurve.curvature import CriticalPoint, CurvatureModel, euler_sum, find_critical_points, k_star
from qcurve.degree import Census, build_M, corollary_check, index_of, pair_criterion, subset_table
from qcurve.diagnostics import (
    flat_bubble,
    integral_equation_constant,
    integral_form_residual,
    kazdan_warner_residual,
    mu_lambda_check,
    pohozaev_residual,
    profile_check,
    state_from_field,
)
from qcurve.reduction import balance_heights, mu_target_single, theta_constants
from qcurve.solver import Seed, continue_branch
from qcurve.sphere import ProblemParams, ZonalBasis, north_pole

P5 = ProblemParams(1)
P6 = ProblemParams(2)
PI3 = math.pi**3
SCHEDULE = [0.4, 0.2, 0.1, 0.05, 0.025]
MU_KSTAR = 1.0683


@pytest.fixture
def line(capsys):
    """Print one PASS/FAIL line past pytest's capture and return the verdict."""

    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}")
        return bool(ok)

    return emit


@pytest.fixture(scope="module")
def kstar_branch():
    start = time.perf_counter()
    br = continue_branch(k_star(P5), SCHEDULE, Seed.bubble(), L=256)
    return br, time.perf_counter() - start


def test_criterion_01_multiplier_exactness(line):
    start = time.perf_counter()
    errs = [abs(multiplier(l, P5) - (l + 1) * (l + 2) * (l + 3)) / ((l + 1) * (l + 2) * (l + 3)) for l in range(201)]
    elapsed = time.perf_counter() - start
    ok = max(errs) <= 1e-11 and abs(multiplier(0, P5) - 6.0) <= 6e-11 and multiplier(0, P5) == P5.c_pde and elapsed < 1.0
    assert line(1, ok, f"max rel err {max(errs):.2e}, multiplier(0) = {multiplier(0, P5):.15g}, {elapsed:.3f} s")


def test_criterion_02_bubble_pde(line):
    start = time.perf_counter()
    res = [pde_residual(Bubble(north_pole(5), t, P5), 256) for t in (1.0, 2.0, 10.0)]
    elapsed = time.perf_counter() - start
    ok = max(res) <= 1e-6 and elapsed < 10.0
    assert line(2, ok, f"residuals {', '.join(f'{r:.1e}' for r in res)} at L = 256, {elapsed:.2f} s")


def test_criterion_03_self_energy(line):
    # the target value is pi^3 as stated; the computed <delta, delta> carries Gamma(n-1) = 6
    vals = np.array([self_energy(Bubble(north_pole(5), t, P5)) for t in (1.0, 2.0, 5.0, 20.0)])
    rel = np.abs(vals - PI3) / PI3
    spread = (vals.max() - vals.min()) / vals.max()
    ok = rel.max() <= 1e-8 and spread <= 1e-9
    assert line(
        3, ok, f"<delta,delta> = {vals[0]:.12g} vs pi^3 = {PI3:.12g} (ratio {vals[0] / PI3:.12g}), spread {spread:.1e}"
    )


def test_criterion_04_radial_ledger(line):
    start = time.perf_counter()
    r5, r6 = radial_ledger(P5), radial_ledger(P6)
    elapsed = time.perf_counter() - start
    vals = [e["closed_form"] for e in r5[:3]]
    ok = (
        np.allclose(vals, [PI3 / 32, 5 * PI3 / 96, PI3 / 48], rtol=1e-14)
        and all(e["rel_error"] <= 1e-9 for e in r5[:3] + r6[:3])
        and r5[3]["rel_error"] <= 1e-12
        and r6[3]["rel_error"] <= 1e-12
        and elapsed < 5.0
    )
    worst = max(e["rel_error"] for e in r5[:3] + r6[:3])
    assert line(4, ok, f"worst closed-form error {worst:.1e}, difference identity {max(r5[3]['rel_error'], r6[3]['rel_error']):.1e}, {elapsed:.2f} s")


def test_criterion_05_interaction_leading_term(line):
    dev = {}
    for t in (20.0, 40.0):
        b1, b2 = Bubble(north_pole(5), t, P5), Bubble(-north_pole(5), t, P5)
        dev[t] = interaction(b1, b2, P5.n - 1, 1) / interaction_leading(b1, b2)
    ok = 0.95 <= dev[20.0] <= 1.05 and abs(dev[40.0] - 1) <= abs(dev[20.0] - 1)
    assert line(5, ok, f"ratio at t=20 {dev[20.0]:.8f}, at t=40 {dev[40.0]:.8f}")


def test_criterion_06_degree(line):
    start = time.perf_counter()
    K5, K6 = k_star(P5), k_star(P6)
    i5, i6 = index_of(K5), index_of(K6)
    chi = euler_sum(find_critical_points(K5))
    scaled = [index_of(K5.scaled(c)) for c in (0.5, 2.0, 10.0)]
    elapsed = time.perf_counter() - start
    ok = i5 == -2 and i6 == 0 and chi == 1 + (-1) ** 5 and scaled == [-2, -2, -2] and elapsed < 5.0
    assert line(6, ok, f"Index m=1 {i5}, m=2 {i6}, Morse sum {chi}, scaled {scaled}, {elapsed:.2f} s")


def _census(rng, params):
    n = params.n
    k_minus, k_plus = int(rng.integers(2, 6)), int(rng.integers(0, 3))
    locs = []
    while len(locs) < k_minus + k_plus:
        x = rng.normal(size=n + 1)
        x /= np.linalg.norm(x)
        if all(np.arccos(np.clip(x @ y, -1, 1)) > 0.1 for y in locs):
            locs.append(x)
    pts = []
    for j, x in enumerate(locs):
        K = rng.uniform(0.5, 3.0)
        lap = -rng.uniform(0.05, 0.999) * n * (n - 1) / 2 * K if j < k_minus else rng.uniform(0.5, 5.0)
        pts.append(CriticalPoint.synthetic(x, K, lap, int(rng.integers(0, n + 1))))
    return Census(tuple(pts), params)


def test_criterion_07_interlacing(line):
    rng = np.random.default_rng(7)
    bad = 0
    for _ in range(100):
        c = _census(rng, P5)
        assert all(pair_criterion(p, q, P5.n) for p, q in itertools.combinations(c.kminus, 2))
        mus_ok = all(r["mu"] < 0 for r in subset_table(c) if len(r["subset"]) >= 2)
        holds, simplified, agree = corollary_check(c)
        if not (mus_ok and holds and agree and index_of(c) == simplified):
            bad += 1
    assert line(7, bad == 0, f"{100 - bad}/100 random censuses interlace and match the simplified sum")


def test_criterion_08_balance_k1(line):
    worst = 0.0
    ratio_err = 0.0
    for m in (1, 2, 3):
        p = ProblemParams(m)
        th = theta_constants(p)
        ratio_err = max(ratio_err, abs(th.theta2 / th.theta1 - 2 / p.sigma))
        rng = np.random.default_rng(m)
        for _ in range(5):
            K, lap = rng.uniform(0.5, 4.0), -rng.uniform(0.1, 10.0)
            M = build_M([CriticalPoint.synthetic(north_pole(p.n), K, lap, p.n)], p)
            tau = rng.uniform(1e-3, 0.5)
            _, t, _ = balance_heights(M, [K], tau, p)
            alpha = K ** (-1 / (2 * p.sigma))
            worst = max(worst, abs(tau * (alpha * t[0]) ** 2 - mu_target_single(lap, K, p.sigma, p.n)))
    ok = worst <= 1e-12 and ratio_err <= 1e-14
    assert line(8, ok, f"max |tau (alpha t)^2 - mu| = {worst:.1e}, Theta2/Theta1 error {ratio_err:.1e}")


def test_criterion_09_blowup_law(kstar_branch, line):
    br, elapsed = kstar_branch
    rep = mu_lambda_check(br, k_star(P5))
    est = rep.estimates[0]
    slope = np.polyfit(np.log(br.taus[-3:]), np.log(br.vmax[-3:]), 1)[0]
    ok = (
        br.stopped is None
        and list(br.taus) == SCHEDULE
        and abs(est - MU_KSTAR) / MU_KSTAR <= 0.10
        and abs(slope + 0.5) <= 0.1
        and elapsed < 300
    )
    assert line(9, ok, f"extrapolated tau vmax^2 = {est:.5f} (target {rep.targets[0]:.5f}), slope {slope:.3f}, {elapsed:.1f} s")


def test_criterion_10_pohozaev(line):
    Kc = integral_equation_constant(P5)
    res = [pohozaev_residual(flat_bubble(1.0), Kc, 2.0, 4.0, P5, N).residual for N in (8, 16, 32, 64)]
    drops = all(b <= max(a / 4, 1e-10) for a, b in zip(res, res[1:]))
    ok = abs(Kc - 3 / (2 * PI3)) <= 1e-15 and res[-1] <= 1e-6 and drops
    assert line(10, ok, f"residual N=8..64: {', '.join(f'{r:.1e}' for r in res)}")


def test_criterion_11_profile(kstar_branch, line):
    br, _ = kstar_branch
    fit = profile_check(br.states[-1], k_star(P5))
    exact = state_from_field(bubble_field(Bubble(north_pole(5), 20.0, P5), ZonalBasis(P5, 256)))
    fit1 = profile_check(exact, CurvatureModel.constant(P5, 1.0))
    ok = fit.deviation <= 0.05 and abs(fit1.k_fit - 0.25) <= 1e-4
    assert line(11, ok, f"branch k_fit {fit.k_fit:.5f} vs {fit.k_target:.5f} ({fit.deviation:.1%}), bubble k_fit {fit1.k_fit:.8f}")


def test_criterion_12_kazdan_warner(kstar_branch, line):
    br, _ = kstar_branch
    K1 = CurvatureModel.constant(P5, 1.0)
    kw_const = kazdan_warner_residual(state_from_field(bubble_field(Bubble(north_pole(5), 3.0, P5), ZonalBasis(P5, 64))), K1)
    # bounded tau = 0 solution for a non-monotone zonal profile
    Kb = CurvatureModel.zonal(P5, [2.0, 0.1, 0.2, -0.2])
    bounded = continue_branch(Kb, [1.0, 0.5, 0.1, 0.0], Seed.constant(), L=64)
    kw_bounded = abs(kazdan_warner_residual(bounded.states[-1], Kb)) if bounded.stopped is None else math.inf
    tail = [abs(kazdan_warner_residual(s, k_star(P5))) for s in br.states[-3:]]
    tail_ok = all(b <= 1.2 * a for a, b in zip(tail, tail[1:]))
    ok = kw_const == 0.0 and kw_bounded <= 1e-6 and tail_ok
    assert line(12, ok, f"constant K {kw_const}, bounded tau=0 {kw_bounded:.1e}, tail {', '.join(f'{x:.3f}' for x in tail)}")


def test_criterion_13_cross_formulation(kstar_branch, line):
    br, _ = kstar_branch
    res = [integral_form_residual(s, k_star(P5)) for s in br.states]
    assert line(13, max(res) <= 5e-6, f"max sup-relative gap between spectral and Riesz forms {max(res):.1e}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
