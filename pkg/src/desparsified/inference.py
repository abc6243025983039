"""De-sparsified (de-biased) estimators and normal confidence intervals.

Linear model: ``b = beta_hat + theta_hat.T @ X.T @ (y - X beta_hat) / n``;
coordinate ``j`` only involves column ``j`` of ``theta_hat``.

Gaussian graphical model: ``T = theta + theta.T - theta.T @ sigma_hat @ theta``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtri

from .errors import DimensionMismatch, IndexOutOfRange, InvalidLevel, NegativeVariance
from .lasso import LassoConfig, default_lambda, fit_lasso
from .linalg import as_matrix, as_vector, gram
from .nodewise import fit_nodewise_column

VARIANCE_SOURCES = ("plug_in_theta_diag", "sandwich", "oracle")
NEGATIVE_VARIANCE_TOL = 1e-12


@dataclass(frozen=True)
class DebiasedEstimate:
    value: float
    variance: float
    std_error: float
    ci_lo: float
    ci_hi: float
    level: float
    variance_source: str
    xi_l1: Optional[float] = None

    @classmethod
    def build(cls, value: float, variance: float, level: float, variance_source: str, xi_l1=None):
        lo, hi = confidence_interval(value, variance, level)
        return cls(
            value=float(value),
            variance=float(variance),
            std_error=math.sqrt(variance),
            ci_lo=lo,
            ci_hi=hi,
            level=float(level),
            variance_source=variance_source,
            xi_l1=None if xi_l1 is None else float(xi_l1),
        )

    def covers(self, truth: float) -> bool:
        return self.ci_lo <= truth <= self.ci_hi

    def to_dict(self) -> dict:
        d = asdict(self)
        d["se"] = d.pop("std_error")
        d["ci"] = [d.pop("ci_lo"), d.pop("ci_hi")]
        return d


@dataclass
class PrecisionEstimate:
    t_hat: np.ndarray
    entry: Optional[tuple[int, int, DebiasedEstimate]] = None


def normal_quantile(q: float) -> float:
    return float(ndtri(q))


def confidence_interval(value: float, variance: float, level: float = 0.95) -> tuple[float, float]:
    """Two-sided normal interval ``value -/+ z_{(1+level)/2} * sqrt(variance)``."""
    if not 0.0 < level < 1.0:
        raise InvalidLevel(f"level must lie in (0, 1), got {level}")
    if variance < 0:
        raise NegativeVariance(f"variance {variance} < 0")
    half = normal_quantile((1.0 + level) / 2.0) * math.sqrt(variance)
    return float(value - half), float(value + half)


def _check_linear(theta_hat, x, y, beta_hat):
    x = as_matrix(x, "x")
    y = as_vector(y, "y")
    beta_hat = as_vector(beta_hat, "beta_hat")
    theta_hat = as_matrix(theta_hat, "theta_hat")
    n, p = x.shape
    if y.size != n or beta_hat.size != p or theta_hat.shape != (p, p):
        raise DimensionMismatch(
            f"x {x.shape}, y ({y.size},), beta_hat ({beta_hat.size},), theta_hat {theta_hat.shape} do not conform"
        )
    return theta_hat, x, y, beta_hat


def desparsified_lasso(beta_hat, theta_hat, x, y) -> np.ndarray:
    """One-step bias correction of an initial estimate ``beta_hat``."""
    theta_hat, x, y, beta_hat = _check_linear(theta_hat, x, y, beta_hat)
    score = x.T @ (y - x @ beta_hat) / x.shape[0]
    return beta_hat + theta_hat.T @ score


def functional_estimate(xi, beta_hat, theta_hat, x, y) -> float:
    """De-sparsified estimate of the linear functional ``xi' beta``."""
    theta_hat, x, y, beta_hat = _check_linear(theta_hat, x, y, beta_hat)
    xi = as_vector(xi, "xi")
    if xi.size != beta_hat.size:
        raise DimensionMismatch("xi has the wrong length")
    score = x.T @ (y - x @ beta_hat) / x.shape[0]
    return float(xi @ beta_hat + (theta_hat @ xi) @ score)


def variance_estimate_linear(
    xi,
    theta_hat,
    sigma_hat,
    n: int,
    sigma_noise: float = 1.0,
    source: str = "plug_in_theta_diag",
) -> float:
    """Variance estimate of ``xi' b``.

    ``plug_in_theta_diag``: ``sigma^2 xi' theta xi / n``;
    ``sandwich``: ``sigma^2 (theta xi)' sigma_hat (theta xi) / n``, the
    conditional variance of the linear term given X;
    ``oracle``: the plug-in formula evaluated at a caller-supplied true
    precision matrix passed as ``theta_hat``.
    """
    if source not in VARIANCE_SOURCES:
        raise ValueError(f"unknown variance source {source!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    xi = as_vector(xi, "xi")
    theta_hat = as_matrix(theta_hat, "theta_hat")
    p = xi.size
    if theta_hat.shape != (p, p):
        raise DimensionMismatch(f"theta_hat {theta_hat.shape} vs len(xi)={p}")
    if source == "sandwich":
        sigma_hat = as_matrix(sigma_hat, "sigma_hat")
        if sigma_hat.shape != (p, p):
            raise DimensionMismatch(f"sigma_hat {sigma_hat.shape} vs len(xi)={p}")
        v = theta_hat @ xi
        q = float(v @ sigma_hat @ v)
    else:
        q = float(xi @ theta_hat @ xi)
    if q < -NEGATIVE_VARIANCE_TOL:
        raise NegativeVariance(f"quadratic form {q:.3e} < 0; theta_hat is not positive on xi")
    return max(q, 0.0) * sigma_noise**2 / n


def desparsified_precision(theta_hat, sigma_hat) -> np.ndarray:
    """``theta + theta.T - theta.T @ sigma_hat @ theta`` (symmetric)."""
    theta_hat = as_matrix(theta_hat, "theta_hat")
    sigma_hat = as_matrix(sigma_hat, "sigma_hat")
    if theta_hat.shape != sigma_hat.shape or theta_hat.shape[0] != theta_hat.shape[1]:
        raise DimensionMismatch(f"theta_hat {theta_hat.shape} vs sigma_hat {sigma_hat.shape}")
    quad = theta_hat.T @ sigma_hat @ theta_hat
    t = theta_hat + theta_hat.T - quad
    return (t + t.T) / 2.0


def desparsified_entry(theta_i, theta_j, sigma_hat, i: int, j: int) -> float:
    """Entry ``(i, j)`` of the de-sparsified precision matrix from columns
    ``i`` and ``j`` of the surrogate inverse alone."""
    return float(theta_i[j] + theta_j[i] - theta_i @ sigma_hat @ theta_j)


def precision_entry_variance(theta_hat, i: int, j: int, n: int) -> float:
    return float(theta_hat[i, i] * theta_hat[j, j] + theta_hat[i, j] * theta_hat[j, i]) / n


def precision_entry_inference(t_hat, theta_hat, i: int, j: int, n: int, level: float = 0.95) -> DebiasedEstimate:
    """Estimate and normal CI for precision entry ``(i, j)``.

    The variance is ``(theta_ii theta_jj + theta_ij theta_ji) / n`` with the
    plug-in surrogate inverse.
    """
    t_hat = as_matrix(t_hat, "t_hat")
    theta_hat = as_matrix(theta_hat, "theta_hat")
    p = t_hat.shape[0]
    if not (0 <= i < p and 0 <= j < p):
        raise IndexOutOfRange(f"entry ({i}, {j}) out of range for p={p}")
    var = precision_entry_variance(theta_hat, i, j, n)
    if var < -NEGATIVE_VARIANCE_TOL:
        raise NegativeVariance(f"variance {var:.3e} < 0")
    return DebiasedEstimate.build(t_hat[i, j], max(var, 0.0), level, "plug_in_theta_diag")


def infer_linear(
    x,
    y,
    xis: Sequence,
    *,
    lam: Optional[float] = None,
    lambda_j: Optional[float] = None,
    cfg: LassoConfig | None = None,
    sigma_noise: float = 1.0,
    level: float = 0.95,
    variance_source: str = "plug_in_theta_diag",
    theta_hat=None,
):
    """Fit the Lasso and the needed nodewise columns, then estimate each
    functional in ``xis``.

    Only columns of the surrogate inverse in the union of the supports of
    ``xis`` are fitted unless ``theta_hat`` is supplied.
    Returns ``(estimates, lasso_fit, theta_hat)``; unfitted columns of the
    returned ``theta_hat`` are zero.
    """
    cfg = cfg or LassoConfig()
    x = np.asfortranarray(as_matrix(x, "x"))
    y = as_vector(y, "y")
    n, p = x.shape
    if lam is None:
        lam = default_lambda(n, max(p, 2), cfg.lambda_constant)
    if lambda_j is None:
        lambda_j = default_lambda(n, max(p, 2), cfg.lambda_constant)
    xis = [as_vector(v, "xi") for v in xis]
    if any(v.size != p for v in xis):
        raise DimensionMismatch("every xi must have length p")
    fit = fit_lasso(x, y, lam, cfg)
    if theta_hat is None:
        theta_hat = np.zeros((p, p))
        needed = sorted(set(np.flatnonzero(np.any(np.array(xis) != 0, axis=0)).tolist())) if xis else []
        for j in needed:
            theta_hat[:, j] = fit_nodewise_column(x, j, lambda_j, cfg).theta_col
    else:
        theta_hat = as_matrix(theta_hat, "theta_hat")
    sigma_hat = gram(x) if variance_source == "sandwich" else None
    out = []
    for xi in xis:
        value = functional_estimate(xi, fit.beta_hat, theta_hat, x, y)
        var = variance_estimate_linear(xi, theta_hat, sigma_hat, n, sigma_noise, variance_source)
        out.append(DebiasedEstimate.build(value, var, level, variance_source, xi_l1=np.abs(xi).sum()))
    return out, fit, theta_hat
