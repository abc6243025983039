import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from desparsified.errors import DimensionMismatch
from desparsified.lasso import LassoConfig, default_lambda, fit_lasso, kkt_residual, objective, soft_threshold

TOL = 1e-8


def orthonormal_design(n, p, seed=0):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, p)))
    return q * math.sqrt(n)


def grid_oracle(x, y, lam, m=401, lo=-2.0, hi=2.0):
    g = np.linspace(lo, hi, m)
    b1, b2 = np.meshgrid(g, g, indexing="ij")
    n = x.shape[0]
    r = y[:, None, None] - x[:, 0, None, None] * b1 - x[:, 1, None, None] * b2
    obj = (r**2).sum(axis=0) / n + 2 * lam * (np.abs(b1) + np.abs(b2))
    k = np.unravel_index(np.argmin(obj), obj.shape)
    return obj[k], np.array([b1[k], b2[k]]), g[1] - g[0]


def grid_cell_slack(x, y, lam, h, box=2.0):
    # Lipschitz constant of the objective on the box times half a cell diagonal
    n = x.shape[0]
    rmax = np.abs(y) + box * np.abs(x).sum(axis=1)
    grad = 2 * (np.abs(x) * rmax[:, None]).sum(axis=0) / n + 2 * lam
    return float(grad.sum() * h / 2)


@pytest.mark.parametrize("z,t,expected", [(3, 1, 2), (-0.5, 1, 0), (-3, 1, -2), (1, 1, 0), (0, 0, 0)])
def test_soft_threshold(z, t, expected):
    assert soft_threshold(z, t) == expected


def test_soft_threshold_rejects_negative():
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.1)


def test_orthonormal_closed_form():
    x = orthonormal_design(50, 2)
    np.testing.assert_allclose(x.T @ x / 50, np.eye(2), atol=1e-12)
    y = x @ np.array([1.0, 0.0])
    fit = fit_lasso(x, y, 0.3)
    np.testing.assert_allclose(fit.beta_hat, [0.7, 0.0], atol=1e-10)
    assert fit.converged


def test_orthonormal_matches_soft_threshold_everywhere():
    x = orthonormal_design(60, 5, seed=3)
    y = np.random.default_rng(1).standard_normal(60)
    lam = 0.1
    fit = fit_lasso(x, y, lam)
    expected = [soft_threshold(v, lam) for v in x.T @ y / 60]
    np.testing.assert_allclose(fit.beta_hat, expected, atol=1e-10)


def test_full_shrinkage():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((30, 6))
    y = rng.standard_normal(30)
    lam_max = np.abs(x.T @ y).max() / 30
    fit = fit_lasso(x, y, lam_max * 1.0001)
    assert not np.any(fit.beta_hat)
    assert kkt_residual(x, y, np.zeros(6), lam_max) == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_grid_oracle_p2(seed):
    rng = np.random.default_rng(1000 + seed)
    x = rng.standard_normal((20, 2))
    y = x @ rng.uniform(-1.5, 1.5, 2) + 0.5 * rng.standard_normal(20)
    lam = 0.1
    fit = fit_lasso(x, y, lam)
    best, _, h = grid_oracle(x, y, lam)
    assert fit.objective <= best + 1e-12
    assert best - fit.objective <= grid_cell_slack(x, y, lam, h)


def test_kkt_certificate_and_perturbation():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((100, 20))
    beta0 = np.zeros(20)
    beta0[:3] = [2.0, -1.5, 1.0]
    y = x @ beta0 + rng.standard_normal(100)
    lam = default_lambda(100, 20)
    fit = fit_lasso(x, y, lam)
    assert fit.converged
    assert fit.kkt_violation <= 10 * TOL
    active = fit.support
    assert active.size > 0
    bad = fit.beta_hat.copy()
    bad[active[0]] += 0.1
    assert kkt_residual(x, y, bad, lam) > 0.01


def test_default_lambda_examples():
    assert default_lambda(100, 400, math.sqrt(2)) == pytest.approx(0.3462, abs=5e-5)
    assert default_lambda(100, 3, 1.0) == pytest.approx(0.1048, abs=5e-5)
    assert default_lambda(100, 3, 2.0) == pytest.approx(2 * default_lambda(100, 3, 1.0), rel=1e-15)
    with pytest.raises(ValueError):
        default_lambda(100, 3, 0.0)
    with pytest.raises(ValueError):
        default_lambda(1, 3)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        fit_lasso(np.ones((5, 2)), np.ones(4), 0.1)
    with pytest.raises(DimensionMismatch):
        kkt_residual(np.ones((5, 2)), np.ones(5), np.ones(3), 0.1)


def test_zero_column_pinned():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((40, 3))
    x[:, 1] = 0.0
    y = x[:, 0] + rng.standard_normal(40)
    fit = fit_lasso(x, y, 0.05)
    assert fit.beta_hat[1] == 0.0
    assert fit.converged


def test_nonconvergence_is_not_an_error():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((50, 30))
    x[:, 1] = x[:, 0] + 1e-3 * rng.standard_normal(50)
    y = x[:, 0] + rng.standard_normal(50)
    fit = fit_lasso(x, y, 1e-4, LassoConfig(tol=1e-14, max_sweeps=2))
    assert not fit.converged and fit.sweeps_used == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(5, 40), st.integers(1, 15), st.floats(0.01, 1.0))
def test_objective_monotone_and_kkt(seed, n, p, lam):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    y = x @ rng.standard_normal(p) + rng.standard_normal(n)
    fit = fit_lasso(x, y, lam)
    trace = fit.objective_trace
    assert np.all(np.diff(trace) <= 1e-12 * max(1.0, abs(trace[0])))
    assert fit.objective == pytest.approx(objective(x, y, fit.beta_hat, lam), rel=1e-12)
    if fit.converged:
        assert fit.kkt_violation <= 100 * TOL


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_shrinkage_dominance(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((30, 8))
    y = x @ rng.standard_normal(8) + rng.standard_normal(30)
    norms = [np.abs(fit_lasso(x, y, lam).beta_hat).sum() for lam in np.linspace(0.01, 2.0, 15)]
    assert all(b <= a + 1e-6 for a, b in zip(norms, norms[1:]))
