"""Nodewise Lasso: a surrogate inverse of the Gram matrix built column by
column from Lasso regressions of each design column on the others."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateNoise, DimensionMismatch, IndexOutOfRange
from .lasso import LassoConfig, LassoFit, default_lambda, fit_lasso
from .linalg import as_matrix

TAU_FLOOR = 1e-12


@dataclass
class NodewiseColumnFit:
    j: int
    gamma_hat: np.ndarray
    tau_sq: float
    theta_col: np.ndarray
    lambda_j: float
    sparsity: int
    lasso: LassoFit = field(repr=False)


@dataclass
class NodewiseFit:
    columns: list[NodewiseColumnFit]
    theta_hat: np.ndarray
    max_surrogate_violation: float = float("nan")

    @property
    def p(self) -> int:
        return self.theta_hat.shape[0]


def fit_nodewise_column(x, j: int, lambda_j: float, cfg: LassoConfig | None = None) -> NodewiseColumnFit:
    """Regress column ``j`` on the remaining columns and build column ``j`` of
    the surrogate inverse.

    ``tau_sq = ||x_j - x_{-j} gamma||_n^2 + lambda_j * ||gamma||_1`` and the
    column is ``(-gamma_1, ..., 1, ..., -gamma_p) / tau_sq``.

    Raises
    ------
    DegenerateNoise
        If ``tau_sq`` falls below ``TAU_FLOOR``.
    """
    cfg = cfg or LassoConfig()
    x = as_matrix(x, "x")
    n, p = x.shape
    if not 0 <= j < p:
        raise IndexOutOfRange(f"column {j} out of range for p={p}")
    if not lambda_j > 0:
        raise ValueError("lambda_j must be > 0")
    others = np.delete(np.arange(p), j)
    target = x[:, j]
    fit = fit_lasso(x[:, others], target, lambda_j, cfg)
    gamma = fit.beta_hat
    resid = target - x[:, others] @ gamma
    tau_sq = float(resid @ resid / n + lambda_j * np.abs(gamma).sum())
    if not tau_sq >= TAU_FLOOR:
        raise DegenerateNoise(f"tau_j^2 = {tau_sq:.3e} for column {j}; design columns are (near) collinear")
    theta_col = np.empty(p)
    theta_col[others] = -gamma / tau_sq
    theta_col[j] = 1.0 / tau_sq
    return NodewiseColumnFit(
        j=j,
        gamma_hat=gamma,
        tau_sq=tau_sq,
        theta_col=theta_col,
        lambda_j=float(lambda_j),
        sparsity=column_sparsity_of(gamma),
        lasso=fit,
    )


def column_sparsity_of(gamma) -> int:
    return int(np.count_nonzero(np.asarray(gamma)))


def column_sparsity(fit: NodewiseColumnFit) -> int:
    """Number of nonzero nodewise regression coefficients."""
    return column_sparsity_of(fit.gamma_hat)


def assemble_theta(column_fits: Sequence[NodewiseColumnFit]) -> NodewiseFit:
    """Stack per-column fits (in column order) into the p x p surrogate inverse."""
    fits = sorted(column_fits, key=lambda c: c.j)
    p = len(fits)
    if p == 0:
        raise DimensionMismatch("no column fits given")
    if [c.j for c in fits] != list(range(p)) or any(c.theta_col.size != p for c in fits):
        raise DimensionMismatch("column fits do not cover columns 0..p-1 with consistent length")
    theta = np.column_stack([c.theta_col for c in fits])
    return NodewiseFit(columns=list(fits), theta_hat=theta)


def fit_nodewise(x, lambda_j=None, cfg: LassoConfig | None = None, workers: int = 1) -> NodewiseFit:
    """Nodewise Lasso over all columns.

    ``lambda_j`` may be a scalar shared by all columns, a length-p sequence,
    or ``None`` for ``default_lambda(n, p, cfg.lambda_constant)``. The
    returned fit carries its surrogate-inverse certificate.
    """
    cfg = cfg or LassoConfig()
    x = np.asfortranarray(as_matrix(x, "x"))
    n, p = x.shape
    if lambda_j is None:
        lambda_j = default_lambda(n, max(p, 2), cfg.lambda_constant)
    lams = np.broadcast_to(np.asarray(lambda_j, dtype=np.float64), (p,))

    def one(j):
        return fit_nodewise_column(x, j, float(lams[j]), cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(one, range(p)))
    else:
        cols = [one(j) for j in range(p)]
    fit = assemble_theta(cols)
    fit.max_surrogate_violation = surrogate_inverse_violation(x.T @ x / n, fit)
    return fit


def surrogate_inverse_violation(sigma_hat, fit: NodewiseFit) -> float:
    """``max_j ( ||sigma_hat @ theta_j - e_j||_inf - lambda_j / tau_j^2 )``.

    Non-positive (up to solver tolerance) whenever every nodewise program is
    solved to optimality.
    """
    sigma_hat = as_matrix(sigma_hat, "sigma_hat")
    p = fit.theta_hat.shape[0]
    if sigma_hat.shape != (p, p):
        raise DimensionMismatch(f"sigma_hat {sigma_hat.shape} vs theta_hat {fit.theta_hat.shape}")
    dev = np.abs(sigma_hat @ fit.theta_hat - np.eye(p)).max(axis=0)
    slack = np.array([c.lambda_j / c.tau_sq for c in fit.columns])
    return float(np.max(dev - slack))
