"""Closed-form variance lower bounds for regular (strongly asymptotically
unbiased) estimators, and the perturbation directions that attain them.

Every bound is reported as its leading term; the vanishing remainder is not
quantified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, ZeroGradient
from .lasso import LassoConfig
from .linalg import as_matrix, as_vector, invert_spd, min_eigenvalue
from .nodewise import fit_nodewise_column

INLINE_DIRECTION_MAX_P = 50


@dataclass
class EfficiencyBound:
    bound_per_sample: float
    n: int
    direction: Union[np.ndarray, None]
    admissible: Optional[bool] = None
    notes: dict = field(default_factory=dict)

    @property
    def bound(self) -> float:
        return self.bound_per_sample / self.n

    def to_dict(self) -> dict:
        d = {
            "bound_per_sample": self.bound_per_sample,
            "bound": self.bound,
            "n": self.n,
            "admissible": self.admissible,
            "leading_term_only": True,
        }
        h = self.direction
        if h is not None:
            if h.shape[0] <= INLINE_DIRECTION_MAX_P:
                d["direction"] = h.tolist()
            else:
                d["direction_summary"] = {
                    "shape": list(h.shape),
                    "l1_norm": float(np.abs(h).sum()),
                    "l2_norm": float(np.linalg.norm(h)),
                    "support_size": int(np.count_nonzero(h)),
                }
        d.update(self.notes)
        return d


@dataclass(frozen=True)
class ModelSet:
    """Sparse, l2-bounded parameter set with a perturbation radius constant."""

    d_n: int
    c2_bound: float = 10.0
    neighborhood_c: float = 1.0

    def __post_init__(self):
        if self.d_n < 0:
            raise ValueError("d_n must be >= 0")
        if not (self.c2_bound > 0 and self.neighborhood_c > 0):
            raise ValueError("c2_bound and neighborhood_c must be > 0")


def _theta_g(theta0, g_dot):
    theta0 = as_matrix(theta0, "theta0")
    g_dot = as_vector(g_dot, "g_dot")
    if theta0.shape != (g_dot.size, g_dot.size):
        raise DimensionMismatch(f"theta0 {theta0.shape} vs len(g_dot)={g_dot.size}")
    if not np.any(g_dot):
        raise ZeroGradient("g_dot is identically zero")
    v = theta0 @ g_dot
    q = float(g_dot @ v)
    if not q > 0:
        raise ZeroGradient(f"g_dot' theta0 g_dot = {q} is not positive")
    return v, q


def worst_subdirection(theta0, g_dot) -> np.ndarray:
    """``theta0 g / (g' theta0 g)``; column ``j / theta_jj`` when ``g = e_j``."""
    v, q = _theta_g(theta0, g_dot)
    return v / q


def normalized_direction(theta0, g_dot) -> np.ndarray:
    """``theta0 g / sqrt(g' theta0 g)``: unit length in the ``sigma0`` norm and
    maximizer of ``(h' g)^2`` over ``h' sigma0 h = 1``."""
    v, q = _theta_g(theta0, g_dot)
    return v / math.sqrt(q)


def cr_bound_linear(theta0, xi, n: int, sigma_noise: float = 1.0, beta0=None, model: Optional["ModelSet"] = None) -> EfficiencyBound:
    """Variance bound ``sigma^2 xi' theta0 xi / n`` for estimating ``xi' beta``.

    When ``beta0`` and ``model`` are given, ``admissible`` records whether the
    extremal perturbation ``beta0 + direction / sqrt(n)`` stays in the model.
    """
    theta0 = as_matrix(theta0, "theta0")
    xi = as_vector(xi, "xi")
    if theta0.shape != (xi.size, xi.size):
        raise DimensionMismatch(f"theta0 {theta0.shape} vs len(xi)={xi.size}")
    per = sigma_noise**2 * float(xi @ theta0 @ xi)
    direction = normalized_direction(theta0, xi) if np.any(xi) else np.zeros_like(xi)
    admissible = None
    if beta0 is not None and model is not None:
        admissible, _ = perturbation_admissible(beta0, direction, n, model)
    return EfficiencyBound(bound_per_sample=per, n=n, direction=direction, admissible=admissible)


def cr_bound_fixed(x, j: int, lambda_j: float, cfg: LassoConfig | None = None, n: Optional[int] = None) -> EfficiencyBound:
    """Fixed-design bound: ``theta_hat_jj / n`` from the nodewise column ``j``."""
    x = as_matrix(x, "x")
    p = x.shape[1]
    if not 0 <= j < p:
        raise IndexOutOfRange(f"j={j} out of range for p={p}")
    col = fit_nodewise_column(x, j, lambda_j, cfg)
    theta_jj = col.theta_col[j]
    return EfficiencyBound(
        bound_per_sample=float(theta_jj),
        n=x.shape[0] if n is None else n,
        direction=col.theta_col / math.sqrt(theta_jj),
        notes={"tau_sq": col.tau_sq, "converged": col.lasso.converged},
    )


def ggm_bound(theta0, xi1, xi2, n: int) -> EfficiencyBound:
    """Bound for ``xi1' Theta xi2`` in a Gaussian graphical model.

    ``sigma^2 = (xi1' T xi1)(xi2' T xi2) + (xi1' T xi2)^2`` and the worst
    direction is ``H = T (xi1 xi2' + xi2 xi1') T / sigma``.
    """
    theta0 = as_matrix(theta0, "theta0")
    xi1 = as_vector(xi1, "xi1")
    xi2 = as_vector(xi2, "xi2")
    p = theta0.shape[0]
    if theta0.shape != (p, p) or xi1.size != p or xi2.size != p:
        raise DimensionMismatch("theta0, xi1, xi2 do not conform")
    a = theta0 @ xi1
    b = theta0 @ xi2
    s2 = float(xi1 @ a) * float(xi2 @ b) + float(xi1 @ b) ** 2
    sigma = math.sqrt(s2)
    H = (np.outer(a, b) + np.outer(b, a)) / sigma if sigma > 0 else np.zeros((p, p))
    return EfficiencyBound(bound_per_sample=s2, n=n, direction=H)


def lecam_bound(fisher, g_dot) -> float:
    """Asymptotic variance lower bound ``g' I^{-1} g``."""
    g_dot = as_vector(g_dot, "g_dot")
    inv = invert_spd(fisher)
    if inv.shape != (g_dot.size, g_dot.size):
        raise DimensionMismatch("fisher and g_dot do not conform")
    return float(g_dot @ inv @ g_dot)


def minimax_rate(n: int, p: int, s: int) -> float:
    """``1/sqrt(n) + s log(p) / n``."""
    if n < 2 or p < 2:
        raise ValueError("minimax_rate needs n >= 2 and p >= 2")
    return 1.0 / math.sqrt(n) + s * math.log(p) / n


def model_membership(beta, model: ModelSet, center=None, radius: Optional[float] = None):
    """Check ``||beta||_0 <= d_n`` and ``||beta||_2 <= C``.

    With ``center`` and ``radius`` also checks ``||beta - center||_2 <= radius``.
    Returns ``(inside, diagnostics)``.
    """
    beta = as_vector(beta, "beta")
    l0 = int(np.count_nonzero(beta))
    l2 = float(np.linalg.norm(beta))
    diag = {
        "l0": l0,
        "l2": l2,
        "sparsity_ok": l0 <= model.d_n,
        "l2_ok": l2 <= model.c2_bound,
    }
    ok = diag["sparsity_ok"] and diag["l2_ok"]
    if center is not None:
        center = as_vector(center, "center")
        dist = float(np.linalg.norm(beta - center))
        diag["distance"] = dist
        diag["radius_ok"] = radius is None or dist <= radius * (1.0 + 1e-12)
        ok = ok and diag["radius_ok"]
    diag["binding"] = [k[:-3] for k in ("sparsity_ok", "l2_ok", "radius_ok") if k in diag and not diag[k]]
    return bool(ok), diag


def perturbation_admissible(beta0, h, n: int, model: ModelSet):
    """Whether ``beta0 + h / sqrt(n)`` stays in the ``c / sqrt(n)`` ball around
    ``beta0`` inside the model set."""
    beta0 = as_vector(beta0, "beta0")
    h = as_vector(h, "h")
    scale = math.sqrt(n)
    return model_membership(beta0 + h / scale, model, center=beta0, radius=model.neighborhood_c / scale)


def compatibility_lower_bound(sigma) -> float:
    """Smallest eigenvalue of ``sigma``: a lower bound on its compatibility
    constant for every support set. Negative means ``sigma`` is not PSD."""
    return min_eigenvalue(sigma)
