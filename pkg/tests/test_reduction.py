import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcurve.curvature import CriticalPoint
from qcurve.degree import build_M
from qcurve.errors import ConvexityError, DomainError
from qcurve.reduction import (
    ReducedConfig,
    balance_heights,
    balance_objective,
    mu_target_single,
    reduced_gradient,
    theta_constants,
)
from qcurve.sphere import ProblemParams, north_pole

PI3 = math.pi**3


def _positive_definite(rng, k):
    B = rng.normal(size=(k, k))
    M = -np.abs(B + B.T)  # interaction entries are negative off the diagonal
    np.fill_diagonal(M, 0.0)
    M += np.diag(np.abs(M).sum(axis=1) + rng.uniform(0.5, 3.0, k))
    return M


def test_theta_constants_n5(p5):
    th = theta_constants(p5)
    assert th.theta1 == pytest.approx(6 * PI3 / 5, rel=1e-13)
    assert th.theta2 == pytest.approx(8 * PI3 / 5, rel=1e-13)
    assert th.theta3 == pytest.approx(32 * PI3, rel=1e-13)


@pytest.mark.parametrize("m", [1, 2, 3, 6])
def test_theta_ratio(m):
    p = ProblemParams(m)
    th = theta_constants(p)
    assert th.theta2 / th.theta1 == pytest.approx(2 / p.sigma, rel=1e-14)
    assert th.balance_coefficient == pytest.approx(p.sigma / 2, rel=1e-14)


def test_reduced_gradient_examples(kstar):
    tau = 0.1
    t_star = math.sqrt(20 / 9 / tau)
    alpha = 3 ** (-1 / 3)
    cfg = ReducedConfig([alpha], [t_star], (north_pole(5),), tau)
    d_alpha, d_t, d_P = reduced_gradient(cfg, kstar)
    assert d_alpha[0] == pytest.approx(0.0, abs=1e-12)
    assert abs(d_t[0]) <= 1e-12 * theta_constants(kstar.params).theta1
    np.testing.assert_allclose(d_P[0], 0.0, atol=1e-15)
    assert t_star == pytest.approx(4.7140, abs=1e-4)


def test_reduced_gradient_signs(kstar):
    tau = 0.1
    alpha = 3 ** (-1 / 3)
    low = reduced_gradient(ReducedConfig([alpha], [3.0], (north_pole(5),), tau), kstar)[1][0]
    high = reduced_gradient(ReducedConfig([alpha], [8.0], (north_pole(5),), tau), kstar)[1][0]
    assert low < 0 < high
    d_alpha = reduced_gradient(ReducedConfig([1.2 * alpha], [4.0], (north_pole(5),), tau), kstar)[0][0]
    assert d_alpha < 0


def test_reduced_config_neighbourhood(kstar):
    cfg = ReducedConfig([1.0], [1000.0], (north_pole(5),), 0.1)
    assert cfg.violations()
    with pytest.raises(DomainError):
        reduced_gradient(cfg, kstar)
    with pytest.raises(DomainError):
        ReducedConfig([1.0, 1.0], [1.0], (north_pole(5),), 0.1)


def test_balance_k1_kstar(p5):
    M = np.array([[5 / 3 ** (5 / 3)]])
    s, t, ok = balance_heights(M, [3.0], 0.1, p5)
    assert ok
    assert 0.1 * t[0] ** 2 == pytest.approx(20 / 9, rel=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_balance_k1_reproduces_blowup_law(m):
    p = ProblemParams(m)
    rng = np.random.default_rng(m)
    for _ in range(5):
        K, lap = rng.uniform(0.5, 4.0), -rng.uniform(0.1, 10.0)
        q = CriticalPoint.synthetic(north_pole(p.n), K, lap, p.n)
        M = build_M([q], p)
        tau = rng.uniform(1e-3, 0.5)
        _, t, ok = balance_heights(M, [K], tau, p)
        alpha = K ** (-1 / (2 * p.sigma))
        mu = mu_target_single(lap, K, p.sigma, p.n)
        assert ok
        assert abs(tau * (alpha * t[0]) ** 2 - mu) <= 1e-12 * max(1.0, mu)


def test_balance_k2_symmetric(p5):
    M = np.array([[25.0, -10.0], [-10.0, 25.0]])
    s, _, ok = balance_heights(M, [1.0, 1.0], 0.01, p5)
    assert ok
    np.testing.assert_allclose(s, math.sqrt(p5.sigma * 0.01 / (2 * 15)), rtol=1e-10)


def test_balance_k2_against_coordinate_descent(p5):
    M = np.array([[25.0, -10.0], [-10.0, 25.0]])
    Kv = np.array([1.0, 1.0])
    c = 0.5 * p5.sigma * 0.01 * Kv ** (-1 / p5.sigma)
    s = np.array([0.1, 0.1])
    for _ in range(400):
        for i in range(2):
            b = M[i] @ s - M[i, i] * s[i]
            # dF/ds_i = -c_i/s_i + M_ii s_i + b = 0
            s[i] = (-b + math.sqrt(b * b + 4 * M[i, i] * c[i])) / (2 * M[i, i])
    ours, _, _ = balance_heights(M, Kv, 0.01, p5)
    np.testing.assert_allclose(ours, s, rtol=1e-10)


def test_balance_requires_convexity(p5):
    with pytest.raises(ConvexityError):
        balance_heights(np.array([[1.0, -10.0], [-10.0, 1.0]]), [1.0, 1.0], 0.1, p5)
    with pytest.raises(DomainError):
        balance_heights(np.eye(2), [1.0, 1.0], 0.0, p5)


def test_balance_objective_derivatives(p5, rng):
    M = _positive_definite(rng, 3)
    Kv = rng.uniform(0.5, 3, 3)
    s = rng.uniform(0.1, 1.0, 3)
    F, g, H = balance_objective(s, M, Kv, 0.2, p5.sigma)
    h = 1e-6
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        Fp, gp, _ = balance_objective(s + e, M, Kv, 0.2, p5.sigma)
        Fm, gm, _ = balance_objective(s - e, M, Kv, 0.2, p5.sigma)
        assert (Fp - Fm) / (2 * h) == pytest.approx(g[i], rel=1e-7, abs=1e-9)
        np.testing.assert_allclose((gp - gm) / (2 * h), H[:, i], rtol=1e-6, atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(k=st.integers(1, 5), seed=st.integers(0, 2**31))
def test_balance_uniqueness_and_scaling(k, seed):
    p = ProblemParams(1)
    rng = np.random.default_rng(seed)
    M = _positive_definite(rng, k)
    Kv = rng.uniform(0.5, 3.0, k)
    tau = rng.uniform(1e-3, 0.3)
    s_ref, t_ref, ok = balance_heights(M, Kv, tau, p)
    assert ok
    for _ in range(20):
        s, _, _ = balance_heights(M, Kv, tau, p, s0=rng.uniform(0.01, 2.0, k))
        np.testing.assert_allclose(s, s_ref, rtol=1e-9)
    _, t4, _ = balance_heights(M, Kv, 4 * tau, p)
    np.testing.assert_allclose(t4, t_ref / 2, rtol=1e-10)


@settings(max_examples=20, deadline=None)
@given(k=st.integers(2, 5), seed=st.integers(0, 2**31))
def test_balanced_heights_solve_the_blowup_system(k, seed):
    """M^T lambda = (sigma/2) lambda mu with lambda_j ~ 1/(K_j^(1/2sigma) alpha_j t_j), mu_j = tau (alpha_j t_j)^2."""
    p = ProblemParams(1)
    rng = np.random.default_rng(seed)
    M = _positive_definite(rng, k)
    Kv = rng.uniform(0.5, 3.0, k)
    tau = rng.uniform(1e-3, 0.3)
    _, t, _ = balance_heights(M, Kv, tau, p)
    alpha = Kv ** (-1 / (2 * p.sigma))
    lam = 1 / (Kv ** (1 / (2 * p.sigma)) * alpha * t)
    mu = tau * (alpha * t) ** 2
    lhs = M.T @ lam
    rhs = 0.5 * p.sigma * lam * mu
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * np.max(np.abs(rhs))
