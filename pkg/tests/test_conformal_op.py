import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcurve import specfun
from qcurve.bubbles import Bubble, bubble_field
from qcurve.conformal_op import (
    apply_P,
    apply_P_inverse,
    funk_hecke_coefficients,
    green_G,
    multiplier,
    multipliers,
    riesz_apply,
    riesz_direct,
    riesz_kernel,
    sigma_inner,
)
from qcurve.errors import SingularityError
from qcurve.sphere import ProblemParams, ZonalBasis, ZonalField, north_pole, south_pole


@pytest.mark.parametrize("m, l, expected", [(1, 0, 6.0), (1, 1, 24.0), (2, 0, 24.0)])
def test_multiplier_values(m, l, expected):
    assert multiplier(l, ProblemParams(m)) == pytest.approx(expected, rel=1e-14)


def test_multiplier_product_formula_n5(p5):
    l = np.arange(201)
    expected = (l + 1.0) * (l + 2.0) * (l + 3.0)
    np.testing.assert_allclose(multipliers(200, p5), expected, rtol=1e-11)


@settings(max_examples=30, deadline=None)
@given(m=st.integers(1, 6), l=st.integers(0, 300))
def test_multiplier_is_rising_factorial(m, l):
    # Gamma(l+n-1)/Gamma(l+1) = (l+1)(l+2)...(l+n-2)
    p = ProblemParams(m)
    expected = math.prod(range(l + 1, l + p.n - 1))
    assert multiplier(l, p) == pytest.approx(expected, rel=1e-11)
    assert multipliers(l, p)[-1] == pytest.approx(expected, rel=1e-11)


def test_apply_P_on_eigenfunctions(p5):
    basis = ZonalBasis(p5, 16)
    # sampled data carry a roundoff tail that the growing symbol amplifies
    one = ZonalField.from_function(np.ones_like, basis).chopped()
    np.testing.assert_allclose(apply_P(one).values, 6.0, rtol=1e-13)
    c2 = ZonalField.from_function(lambda u: specfun.gegenbauer_eval(2, p5.lam, u), basis).chopped()
    np.testing.assert_allclose(apply_P(c2).values, 60.0 * c2.values, rtol=1e-12, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=17, max_size=17))
def test_inverse_round_trip(c):
    basis = ZonalBasis(ProblemParams(1), 16)
    v = ZonalField(basis, np.array(c))
    back = apply_P_inverse(apply_P(v))
    np.testing.assert_allclose(back.coeffs, v.coeffs, atol=1e-11)


def test_sigma_inner_is_symmetric_and_positive(p5, rng):
    basis = ZonalBasis(p5, 20)
    u = ZonalField(basis, rng.normal(size=21))
    v = ZonalField(basis, rng.normal(size=21))
    assert sigma_inner(u, v) == pytest.approx(sigma_inner(v, u), rel=1e-12)
    assert sigma_inner(u, u) > 0


def test_green_function_values():
    N, S = north_pole(5), south_pole(5)
    E = np.zeros(6)
    E[0] = 1
    assert green_G(N, S) == 0.5
    assert green_G(N, E) == pytest.approx(1.0)
    with pytest.raises(SingularityError):
        green_G(N, N)


def test_riesz_kernel_antipodal(p5):
    assert riesz_kernel(north_pole(5), south_pole(5), p5) == pytest.approx(1 / (16 * math.pi**3), rel=1e-13)
    with pytest.raises(SingularityError):
        riesz_kernel(north_pole(5), north_pole(5), p5)


def test_funk_hecke_inverts_multipliers(p5, p6):
    for p in (p5, p6):
        mu = funk_hecke_coefficients(p, 60)
        np.testing.assert_allclose(mu * multipliers(60, p), 1.0, rtol=1e-11)


def test_riesz_apply_examples(p5):
    basis = ZonalBasis(p5, 64)
    const = ZonalField.from_function(lambda u: np.full_like(u, 6.0), basis)
    np.testing.assert_allclose(riesz_apply(const).values, 1.0, rtol=1e-10)

    delta = bubble_field(Bubble(north_pole(5), 2.0, p5), basis)
    back = riesz_apply(apply_P(delta))
    assert np.max(np.abs(back.values - delta.values)) / np.max(delta.values) < 1e-6

    c1 = ZonalField.from_function(lambda u: specfun.gegenbauer_eval(1, p5.lam, u), basis)
    np.testing.assert_allclose(riesz_apply(c1).values, c1.values / 24.0, atol=1e-10)


def test_riesz_direct_is_independent_of_spectral_path(p5):
    # P_sigma 1 = 6, so the potential of the constant 6 is exactly 1
    for u in (0.9, 0.3, -0.5):
        assert riesz_direct(lambda s: np.full_like(s, 6.0), u, p5) == pytest.approx(1.0, rel=1e-13)
    g = lambda s: specfun.gegenbauer_eval(2, p5.lam, s)
    assert riesz_direct(g, 0.3, p5) == pytest.approx(g(0.3) / 60.0, rel=1e-10, abs=1e-13)


def test_injected_constant_fault_is_visible():
    bad = ProblemParams(1, green_fault=1.01)
    assert riesz_direct(lambda s: np.full_like(s, 6.0), 0.2, bad) == pytest.approx(1.01, rel=1e-12)
