import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from desparsified.errors import DimensionMismatch, NotPositiveDefinite
from desparsified.linalg import (
    cholesky,
    gram,
    invert_spd,
    quadratic_form,
    read_matrix_csv,
    write_matrix_csv,
)

from conftest import THETA_T2, random_spd, toeplitz2


def test_cholesky_diagonal():
    np.testing.assert_allclose(cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_cholesky_2x2_by_hand():
    L = cholesky(toeplitz2())
    np.testing.assert_allclose(L, [[1.0, 0.0], [0.5, math.sqrt(0.75)]], atol=1e-15)
    assert L[1, 1] == pytest.approx(0.8660, abs=1e-4)


@pytest.mark.parametrize("p", [1, 3, 10])
def test_cholesky_identity(p):
    np.testing.assert_array_equal(cholesky(np.eye(p)), np.eye(p))


@pytest.mark.parametrize("p", [2, 7, 20, 50])
def test_cholesky_reconstructs_random_spd(rng, p):
    a = random_spd(rng, p)
    L = cholesky(a)
    assert np.allclose(L, np.tril(L))
    assert np.all(np.diag(L) > 0)
    np.testing.assert_allclose(L @ L.T, a, rtol=1e-10, atol=1e-10 * np.abs(a).max())


def test_cholesky_rejects_singular_and_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.ones((3, 3)))
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.diag([1.0, 1e-13]))
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, 0.5], [0.4, 1.0]]))


def test_cholesky_rank_deficient_gram(rng):
    x = rng.standard_normal((5, 8))
    with pytest.raises(NotPositiveDefinite):
        cholesky(gram(x))


def test_invert_spd_examples():
    np.testing.assert_allclose(invert_spd(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))
    # adjugate / determinant for the 2x2 case
    a = toeplitz2()
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    adj = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]])
    np.testing.assert_allclose(invert_spd(a), adj / det, atol=1e-14)
    np.testing.assert_allclose(invert_spd(a), THETA_T2, atol=1e-14)
    np.testing.assert_array_equal(invert_spd(np.eye(4)), np.eye(4))


@pytest.mark.parametrize("p", [2, 10, 40])
def test_invert_spd_properties(rng, p):
    a = random_spd(rng, p)
    inv = invert_spd(a)
    np.testing.assert_allclose(a @ inv, np.eye(p), atol=1e-8)
    np.testing.assert_allclose(invert_spd(inv), a, atol=1e-6)


def test_gram_examples(rng):
    np.testing.assert_allclose(gram(np.eye(2)), [[0.5, 0.0], [0.0, 0.5]])
    np.testing.assert_allclose(gram(np.ones((4, 1))), [[1.0]])
    x = rng.standard_normal((5, 3))
    brute = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(5):
                brute[i, j] += x[k, i] * x[k, j]
    np.testing.assert_allclose(gram(x), brute / 5, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 8)), elements=st.floats(-100, 100)))
def test_gram_psd_symmetric(x):
    g = gram(x)
    np.testing.assert_array_equal(g, g.T)
    scale = max(1.0, np.abs(g).max())
    assert np.linalg.eigvalsh(g)[0] >= -1e-10 * scale
    np.testing.assert_allclose(np.diag(g), (x**2).sum(axis=0) / x.shape[0], rtol=1e-12, atol=1e-300)


def test_quadratic_form_examples():
    e1, e2 = np.eye(2)
    assert quadratic_form(e1, np.eye(2), e1) == 1.0
    assert quadratic_form(e1, THETA_T2, e2) == pytest.approx(-2 / 3, abs=1e-15)
    assert quadratic_form(np.zeros(3), np.ones((3, 3)), np.zeros(3)) == 0.0
    with pytest.raises(DimensionMismatch):
        quadratic_form(np.ones(2), np.eye(3), np.ones(3))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_quadratic_form_symmetric(p, seed):
    rng = np.random.default_rng(seed)
    a = random_spd(rng, p)
    v, w = rng.standard_normal(p), rng.standard_normal(p)
    assert quadratic_form(v, a, w) == pytest.approx(quadratic_form(w, a, v), rel=1e-12, abs=1e-12)


def test_csv_round_trip(tmp_path, rng):
    a = rng.standard_normal((4, 3)) * 10.0 ** rng.integers(-20, 20, size=(4, 3))
    path = tmp_path / "m.csv"
    write_matrix_csv(path, a)
    np.testing.assert_array_equal(read_matrix_csv(path), a)
    first = path.read_text().splitlines()[0]
    assert first.count(",") == 2 and "e" in first.lower() or "." in first
