"""Dense linear algebra helpers.

Matrices are plain 2-D ``float64`` numpy arrays and vectors are 1-D arrays.
Everything here is O(p^3) at worst, which is fine at the sizes used in this
package (p up to a few thousand).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, NotPositiveDefinite

PIVOT_FLOOR = 1e-12
SYMMETRY_TOL = 1e-10


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float array or raise ``ValueError``."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _check_square_symmetric(a: np.ndarray) -> None:
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise NotPositiveDefinite("matrix is not symmetric")


def cholesky(a) -> np.ndarray:
    """Lower-triangular Cholesky factor ``L`` with ``L @ L.T == a``.

    Raises
    ------
    NotPositiveDefinite
        If ``a`` is not symmetric or some pivot ``L[j, j]**2`` is at most
        ``PIVOT_FLOOR``.
    """
    a = as_matrix(a)
    _check_square_symmetric(a)
    if a.shape[0] == 0:
        return a.copy()
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    pivots = np.diag(L) ** 2
    if np.min(pivots) <= PIVOT_FLOOR:
        k = int(np.argmin(pivots))
        raise NotPositiveDefinite(f"pivot {pivots[k]:.3e} at index {k} below floor {PIVOT_FLOOR}")
    return L


def invert_spd(a) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via its Cholesky factor."""
    L = cholesky(a)
    p = L.shape[0]
    inv = sla.cho_solve((L, True), np.eye(p))
    return (inv + inv.T) / 2.0


def gram(x) -> np.ndarray:
    """Gram matrix ``x.T @ x / n``."""
    x = as_matrix(x, "x")
    n = x.shape[0]
    if n < 1:
        raise DimensionMismatch("gram needs at least one row")
    g = x.T @ x / n
    return (g + g.T) / 2.0


def quadratic_form(v, a, w) -> float:
    """Return ``v.T @ a @ w``."""
    v = as_vector(v, "v")
    w = as_vector(w, "w")
    a = as_matrix(a, "a")
    if a.shape != (v.size, w.size):
        raise DimensionMismatch(f"cannot form v'Aw with len(v)={v.size}, A {a.shape}, len(w)={w.size}")
    return float(v @ a @ w)


def min_eigenvalue(a) -> float:
    a = as_matrix(a)
    _check_square_symmetric(a)
    return float(np.linalg.eigvalsh(a)[0])


def write_matrix_csv(path, a) -> None:
    """Write a matrix as comma-separated rows, 17 significant digits, no header."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        for row in a:
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed number") from None
    if not rows:
        return np.zeros((0, 0))
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DimensionMismatch(f"{path}: ragged rows")
    return as_matrix(rows, str(path))


def read_vector_csv(path) -> np.ndarray:
    """Read a vector stored either as one row or as one column."""
    m = read_matrix_csv(path)
    if m.shape[0] == 1 or m.shape[1] == 1:
        return m.ravel()
    raise DimensionMismatch(f"{path}: expected a single row or column, got {m.shape}")
