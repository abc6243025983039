import math

import numpy as np
import pytest

from desparsified.bounds import (
    ModelSet,
    compatibility_lower_bound,
    cr_bound_fixed,
    cr_bound_linear,
    ggm_bound,
    lecam_bound,
    minimax_rate,
    model_membership,
    normalized_direction,
    perturbation_admissible,
    worst_subdirection,
)
from desparsified.datagen import CovarianceSpec, build_covariance, make_sparse_beta, sample_mvn
from desparsified.errors import DimensionMismatch, IndexOutOfRange, NotPositiveDefinite, ZeroGradient
from desparsified.linalg import gram, invert_spd, quadratic_form

from conftest import THETA_T2, random_spd, toeplitz2
from test_lasso import orthonormal_design

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])


def test_worst_subdirection_examples():
    np.testing.assert_allclose(worst_subdirection(np.eye(2), E1), E1)
    np.testing.assert_allclose(worst_subdirection(THETA_T2, E1), [1.0, -0.5], atol=1e-10)
    # degree -1 in g; the sigma-normalized direction is the scale-free one
    np.testing.assert_allclose(worst_subdirection(THETA_T2, 5 * E1), worst_subdirection(THETA_T2, E1) / 5, atol=1e-15)
    np.testing.assert_allclose(normalized_direction(THETA_T2, 5 * E1), normalized_direction(THETA_T2, E1), atol=1e-15)
    with pytest.raises(ZeroGradient):
        worst_subdirection(np.eye(2), np.zeros(2))


def test_normalized_direction_examples(rng):
    np.testing.assert_allclose(normalized_direction(np.eye(2), E1), E1)
    np.testing.assert_allclose(
        normalized_direction(THETA_T2, E1), [4 / 3 / math.sqrt(4 / 3), -2 / 3 / math.sqrt(4 / 3)], atol=1e-10
    )
    np.testing.assert_allclose(normalized_direction(THETA_T2, E1), [1.1547, -0.5774], atol=5e-5)
    for _ in range(20):
        p = int(rng.integers(2, 8))
        theta = random_spd(rng, p)
        h = normalized_direction(theta, rng.standard_normal(p))
        assert quadratic_form(h, invert_spd(theta), h) == pytest.approx(1.0, abs=1e-10)


def test_cr_bound_linear_examples():
    assert cr_bound_linear(np.eye(2), E1, 100).bound == pytest.approx(0.01, abs=1e-15)
    b = cr_bound_linear(THETA_T2, E1, 100)
    assert abs(b.bound - 4 / 300) <= 1e-10
    assert b.bound == pytest.approx(0.013333, abs=5e-7)
    assert abs(cr_bound_linear(np.eye(2), E1 + E2, 100).bound - 0.02) <= 1e-10
    assert cr_bound_linear(np.eye(2), E1, 100, sigma_noise=3).bound_per_sample == 9.0
    with pytest.raises(DimensionMismatch):
        cr_bound_linear(np.eye(3), E1, 100)


def test_cauchy_schwarz_extremality(rng):
    for _ in range(5):
        p = 6
        theta = random_spd(rng, p)
        sigma = invert_spd(theta)
        g = rng.standard_normal(p)
        cap = quadratic_form(g, theta, g)
        for _ in range(100):
            h = rng.standard_normal(p)
            h /= math.sqrt(quadratic_form(h, sigma, h))
            assert (h @ g) ** 2 <= cap + 1e-9
        h0 = normalized_direction(theta, g)
        assert (h0 @ g) ** 2 == pytest.approx(cap, abs=1e-9)


def test_lecam_examples_and_consistency(rng):
    assert lecam_bound(np.eye(2), E1) == 1.0
    assert abs(lecam_bound(toeplitz2(), E1) - 4 / 3) <= 1e-10
    assert lecam_bound(np.eye(2), np.zeros(2)) == 0.0
    with pytest.raises(NotPositiveDefinite):
        lecam_bound(np.ones((2, 2)), E1)
    for _ in range(10):
        sigma = random_spd(rng, 5)
        xi = rng.standard_normal(5)
        n = 123
        assert lecam_bound(sigma, xi) == pytest.approx(n * cr_bound_linear(invert_spd(sigma), xi, n).bound, abs=1e-10)


def test_ggm_bound_examples():
    assert ggm_bound(np.eye(2), E1, E1, 50).bound_per_sample == 2.0
    assert ggm_bound(np.eye(2), E1, E2, 50).bound_per_sample == 1.0
    assert abs(ggm_bound(THETA_T2, E1, E2, 50).bound_per_sample - 20 / 9) <= 1e-10


def test_ggm_symmetry_and_direction(rng):
    theta = random_spd(rng, 5)
    a, b = rng.standard_normal(5), rng.standard_normal(5)
    g1, g2 = ggm_bound(theta, a, b, 10), ggm_bound(theta, b, a, 10)
    assert g1.bound_per_sample == pytest.approx(g2.bound_per_sample, abs=1e-12)
    np.testing.assert_allclose(g1.direction, g2.direction, atol=1e-12)
    np.testing.assert_allclose(g1.direction, g1.direction.T, atol=1e-12)
    j = 2
    e = np.zeros(5)
    e[j] = 1.0
    H = ggm_bound(theta, e, e, 10).direction
    sigma = math.sqrt(2) * theta[j, j]
    np.testing.assert_allclose(H, 2 * np.outer(theta[:, j], theta[:, j]) / sigma, atol=1e-12)


def test_minimax_examples():
    assert minimax_rate(100, 1000, 5) == pytest.approx(0.44539, abs=5e-6)
    assert minimax_rate(100, 1000, 0) == 0.1
    assert minimax_rate(10000, 2, 1) == pytest.approx(0.0100693, abs=5e-8)
    assert minimax_rate(200, 50, 3) < minimax_rate(100, 50, 3)
    assert minimax_rate(100, 100, 3) < minimax_rate(100, 200, 3) < minimax_rate(100, 200, 4)
    with pytest.raises(ValueError):
        minimax_rate(1, 5, 1)


def test_model_membership_examples():
    ok, diag = model_membership(np.zeros(5), ModelSet(d_n=0, c2_bound=1e-3))
    assert ok and diag["binding"] == []
    ok, diag = model_membership(np.array([1.0, 1.0, 1.0, 0.0]), ModelSet(d_n=2))
    assert not ok and diag["binding"] == ["sparsity"] and diag["l0"] == 3
    ok, diag = model_membership(np.array([3.0, 4.0]), ModelSet(d_n=2, c2_bound=4.9))
    assert not ok and diag["binding"] == ["l2"] and diag["l2"] == 5.0


def test_perturbation_support_union():
    _, theta0 = build_covariance(CovarianceSpec("banded_precision", 30, bandwidth=1, off_diag=0.3))
    beta0 = make_sparse_beta(30, 4, 1.0, 3, include=[10])
    n = 400
    for j in (0, 10, 29):
        h = theta0[:, j] / math.sqrt(theta0[j, j])
        model = ModelSet(d_n=np.count_nonzero(beta0) + 3, neighborhood_c=np.linalg.norm(h) + 1e-9)
        ok, diag = perturbation_admissible(beta0, h, n, model)
        assert ok, diag
        assert diag["distance"] == pytest.approx(np.linalg.norm(h) / math.sqrt(n))
    b = cr_bound_linear(theta0, np.eye(30)[10], n, beta0=beta0, model=ModelSet(d_n=7, neighborhood_c=2.0))
    assert b.admissible is True
    b = cr_bound_linear(theta0, np.eye(30)[10], n, beta0=beta0, model=ModelSet(d_n=4, neighborhood_c=2.0))
    assert b.admissible is False


def test_cr_bound_fixed_examples():
    x = orthonormal_design(100, 3)
    b = cr_bound_fixed(x, 1, 0.1)
    assert b.bound_per_sample == pytest.approx(1.0, abs=1e-12)
    assert b.bound == pytest.approx(0.01, abs=1e-14)
    xc = sample_mvn(200, toeplitz2(), 5)
    oracle = invert_spd(gram(xc))
    for j in (0, 1):
        assert abs(cr_bound_fixed(xc, j, 0.05).bound_per_sample - oracle[j, j]) <= 0.2
    with pytest.raises(IndexOutOfRange):
        cr_bound_fixed(xc, 2, 0.05)


def test_compatibility_examples():
    assert compatibility_lower_bound(np.eye(4)) == pytest.approx(1.0)
    assert compatibility_lower_bound(toeplitz2()) == pytest.approx(0.5, abs=1e-12)
    assert compatibility_lower_bound(np.diag([3.0, 7.0])) == pytest.approx(3.0)
    assert compatibility_lower_bound(np.array([[1.0, 2.0], [2.0, 1.0]])) < 0


def _phi_bruteforce(sigma, S):
    """Compatibility constant over the cone, via sign patterns on S and an LP-free QP."""
    cp = pytest.importorskip("cvxpy")
    p = sigma.shape[0]
    Sc = [k for k in range(p) if k not in S]
    best = math.inf
    L = np.linalg.cholesky(sigma)
    for signs in np.array(np.meshgrid(*[[-1, 1]] * len(S))).reshape(len(S), -1).T:
        b = cp.Variable(p)
        cons = [cp.multiply(signs, b[S]) >= 0, cp.sum(cp.multiply(signs, b[S])) == 1]
        if Sc:
            cons.append(cp.norm1(b[Sc]) <= 3)
        prob = cp.Problem(cp.Minimize(cp.sum_squares(L.T @ b)), cons)
        prob.solve()
        best = min(best, prob.value)
    return len(S) * best


@pytest.mark.parametrize("seed", range(3))
def test_compatibility_is_lower_bound_for_phi(seed):
    rng = np.random.default_rng(seed)
    sigma = random_spd(rng, 4, jitter=0.2)
    lam_min = compatibility_lower_bound(sigma)
    for S in ([0], [1, 2], [0, 1, 3]):
        assert lam_min <= _phi_bruteforce(sigma, S) + 1e-6
