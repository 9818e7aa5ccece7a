import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcurve import bubbles
from qcurve.bubbles import (
    Bubble,
    bubble_field,
    conformal_mass,
    derivatives,
    empirical_constant,
    eval_bubble,
    inequality_suite,
    interaction,
    interaction_leading,
    pde_residual,
    radial_ledger,
    self_energy,
    self_energy_closed_form,
)
from qcurve.errors import AccuracyError, DomainError
from qcurve.sphere import ProblemParams, ZonalBasis, chart_factor, north_pole, south_pole, stereographic

PI3 = math.pi**3


def _point(theta, n=5):
    x = np.zeros(n + 1)
    x[0], x[-1] = math.sin(theta), math.cos(theta)
    return x


def test_bubble_pointwise_values(p5):
    b = Bubble(north_pole(5), 3.0, p5)
    assert eval_bubble(b, north_pole(5)) == pytest.approx(3.0)
    assert eval_bubble(b, south_pole(5)) == pytest.approx(1 / 3)
    flat = Bubble(north_pole(5), 1.0, p5)
    assert eval_bubble(flat, _point(1.2)) == pytest.approx(1.0)


def test_bubble_rejects_nonpositive_height(p5):
    with pytest.raises(DomainError):
        Bubble(north_pole(5), 0.0, p5)


def test_derivatives(p5):
    b = Bubble(north_pole(5), 4.0, p5)
    d_t, d_P = derivatives(b, north_pole(5))
    assert d_t == pytest.approx(1.0)
    np.testing.assert_allclose(d_P, 0.0, atol=1e-15)
    b1 = Bubble(north_pole(5), 1.0, p5)
    for theta in (0.3, 1.4, 2.9):
        d_t, _ = derivatives(b1, _point(theta))
        assert d_t == pytest.approx(math.cos(theta), abs=1e-14)


def test_t_derivative_matches_finite_difference(p5):
    x = _point(0.7)
    t, h = 3.0, 1e-6
    fd = (eval_bubble(Bubble(north_pole(5), t + h, p5), x) - eval_bubble(Bubble(north_pole(5), t - h, p5), x)) / (2 * h)
    assert derivatives(Bubble(north_pole(5), t, p5), x)[0] == pytest.approx(fd, rel=1e-8)


def test_P_derivative_matches_finite_difference(p5):
    x = _point(0.7)
    b = Bubble(north_pole(5), 3.0, p5)
    _, d_P = derivatives(b, x)
    h = 1e-6
    e0 = np.zeros(6)
    e0[0] = 1.0
    plus = Bubble(_point(h), 3.0, p5)
    minus = Bubble(_point(-h), 3.0, p5)
    fd = (eval_bubble(plus, x) - eval_bubble(minus, x)) / (2 * h)
    assert d_P @ e0 == pytest.approx(fd, rel=1e-7)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0.2, 50.0), y=st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_flat_chart_form(t, y):
    p = ProblemParams(1)
    y = np.array(y)
    x, _ = stereographic(y)
    b = Bubble(south_pole(5), t, p)
    expected = 2 * t / (1 + t * t * (y @ y))
    assert chart_factor(y) * eval_bubble(b, x) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("t, L, tol", [(1.0, 64, 1e-12), (2.0, 128, 1e-8), (10.0, 256, 1e-6)])
def test_pde_residual(p5, t, L, tol):
    assert pde_residual(Bubble(north_pole(5), t, p5), L) <= tol


@pytest.mark.parametrize("t, L", [(2.0, 16), (6.0, 40), (10.0, 80)])
def test_pde_residual_improves_with_truncation(p5, t, L):
    # holds while truncation dominates; past ~1e-9 the sampled roundoff, amplified
    # by the cubic symbol, sets a plateau
    b = Bubble(north_pole(5), t, p5)
    assert pde_residual(b, 2 * L) < pde_residual(b, L)


def test_pde_residual_n6(p6):
    assert pde_residual(Bubble(north_pole(6), 10.0, p6), 256) <= 1e-6


def test_pde_residual_refuses_unresolved_heights(p5):
    with pytest.raises(AccuracyError):
        pde_residual(Bubble(north_pole(5), 50.0, p5), 64)


def test_self_energy_is_height_and_axis_invariant(p5):
    vals = [self_energy(Bubble(north_pole(5), t, p5)) for t in (1, 2, 5, 20)]
    vals.append(self_energy(Bubble(south_pole(5), 5.0, p5), axis=north_pole(5)))
    assert (max(vals) - min(vals)) / max(vals) <= 1e-9


def test_self_energy_equals_gamma_times_closed_form(p5, p6):
    # the Beta-function expression is int delta^n; the energy carries the extra Gamma(n-1)
    for p in (p5, p6):
        e = self_energy(Bubble(north_pole(p.n), 3.0, p))
        assert e == pytest.approx(p.c_pde * self_energy_closed_form(p), rel=1e-10)
    assert self_energy_closed_form(p5) == pytest.approx(PI3, rel=1e-14)


def test_self_energy_at_t1_is_constant_field_energy(p5):
    e = self_energy(Bubble(north_pole(5), 1.0, p5))
    assert e == pytest.approx(p5.c_pde * p5.area, rel=1e-13)


def test_conformal_mass_is_height_invariant(p5):
    masses = [conformal_mass(Bubble(north_pole(5), t, p5)) for t in (1, 2, 5, 20)]
    assert (max(masses) - min(masses)) / max(masses) <= 1e-8
    assert masses[0] == pytest.approx(PI3, rel=1e-12)


def test_bubble_field_requires_axis_alignment(p5):
    basis = ZonalBasis(p5, 16)
    with pytest.raises(DomainError):
        bubble_field(Bubble(_point(0.4), 2.0, p5), basis, axis=north_pole(5))


def test_interaction_all_ones(p5):
    b1 = Bubble(north_pole(5), 1.0, p5)
    b2 = Bubble(south_pole(5), 1.0, p5)
    assert interaction(b1, b2, 2, 1) == pytest.approx(p5.area, rel=1e-12)


def test_interaction_leading_constant(p5):
    b1 = Bubble(north_pole(5), 20.0, p5)
    b2 = Bubble(south_pole(5), 20.0, p5)
    # 2^6 * pi^3/12 * G / (t1 t2) with G = 1/2
    assert interaction_leading(b1, b2) == pytest.approx(2**6 * PI3 / 12 * 0.5 / 400, rel=1e-13)


def test_interaction_leading_term_converges(p5):
    dev = {}
    for t in (10.0, 20.0, 40.0):
        b1, b2 = Bubble(north_pole(5), t, p5), Bubble(south_pole(5), t, p5)
        dev[t] = abs(interaction(b1, b2, p5.n - 1, 1) / interaction_leading(b1, b2) - 1)
    assert dev[20.0] <= 0.05
    assert dev[10.0] >= dev[20.0] >= dev[40.0]


def test_interaction_with_square_exponent_is_not_the_leading_term(p5):
    """delta_1^2 delta_2 decays more slowly; the leading constant only fits exponent (n-1, 1)."""
    ratios = []
    for t in (10.0, 20.0, 40.0):
        b1, b2 = Bubble(north_pole(5), t, p5), Bubble(south_pole(5), t, p5)
        ratios.append(interaction(b1, b2, 2, 1) / interaction_leading(b1, b2))
    assert all(abs(r - 1) > 0.3 for r in ratios)
    assert ratios[0] > ratios[1] > ratios[2]


def test_interaction_rejects_close_centres(p5):
    with pytest.raises(DomainError):
        interaction(Bubble(north_pole(5), 2, p5), Bubble(_point(0.05), 2, p5), 4, 1)


@pytest.mark.parametrize("p", [ProblemParams(1), ProblemParams(2)])
def test_radial_ledger(p):
    report = radial_ledger(p)
    assert len(report) == 4
    assert all(e["rel_error"] <= 1e-9 for e in report[:3])
    assert report[3]["rel_error"] <= 1e-12


def test_radial_ledger_values_n5(p5):
    vals = [e["closed_form"] for e in radial_ledger(p5)[:3]]
    np.testing.assert_allclose(vals, [PI3 / 32, 5 * PI3 / 96, PI3 / 48], rtol=1e-14)


def test_empirical_constant_examples():
    assert empirical_constant("taylor_remainder", [1.0], [0.0], [2.0]) == 0.0
    assert empirical_constant("second_order", [1.0, 2.0], [1.0, 0.5], [2.0, 2.0]) <= 1e-12
    assert empirical_constant("second_order", [1.0], [1.0], [3.0]) == pytest.approx(3.0)


def test_inequality_suite_is_stable():
    report = inequality_suite()
    assert {r["inequality"] for r in report} == set(bubbles.INEQUALITIES)
    assert all(r["stable"] and math.isfinite(r["C"]) for r in report)


def test_inequality_suite_needs_samples():
    with pytest.raises(DomainError):
        inequality_suite(samples=100)
