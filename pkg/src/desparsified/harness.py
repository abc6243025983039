"""Replicated Monte Carlo experiments for the de-sparsified estimators.

Each replicate is a pure function of ``(config, grid index, replicate index)``:
its random streams are derived from the master seed by hashing, so reports
are identical whatever the number of worker processes. Reports state what
was checked at the simulated ``(n, beta0)`` points only; they make no claim
of uniformity over the parameter space.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import partial
from typing import Any, Optional, Sequence

import numpy as np
from scipy.special import ndtr

from . import streams
from .bounds import ModelSet, cr_bound_fixed, cr_bound_linear, ggm_bound, normalized_direction, perturbation_admissible
from .datagen import CovarianceSpec, build_covariance, make_sparse_beta, sample_mvn, simulate_linear
from .errors import TooFewSamples
from .inference import (
    confidence_interval,
    desparsified_entry,
    variance_estimate_linear,
)
from .lasso import LassoConfig, default_lambda, fit_lasso
from .linalg import cholesky
from .nodewise import fit_nodewise_column

MODELS = ("linear_random_design", "linear_fixed_design", "ggm")
EXPERIMENTS = ("inference", "bias_rate", "oracle_inequality", "local_perturbation", "ggm")

# top-level seed keys, kept apart from the per-replicate stream ids
_KEY_BETA = 101
_KEY_DESIGN = 102
_KEY_REPLICATE = 103


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of one Monte Carlo experiment.

    Indices (``target_coordinate``, ``xi`` positions, ``entry``) are 0-based.
    ``perturbation`` is ``None``, ``"worst"`` (the normalized worst
    sub-direction of the target) or an explicit length-``p`` vector ``h``;
    data are then generated under ``beta0 + h / sqrt(n)``.
    """

    model: str = "linear_random_design"
    experiment: str = "inference"
    n: int = 400
    p: int = 200
    s: int = 3
    R: int = 500
    signal: float = 1.0
    sigma_noise: float = 1.0
    covariance: CovarianceSpec = field(default_factory=CovarianceSpec)
    lambda_constant: float = math.sqrt(2.0)
    lambda_j_constant: float = math.sqrt(2.0)
    target_coordinate: int = 0
    xi: Optional[tuple] = None
    entry: tuple = (0, 1)
    perturbation: Any = None
    level: float = 0.95
    variance_source: str = "plug_in_theta_diag"
    target_in_support: bool = True
    n_grid: tuple = ()
    s_grid: tuple = ()
    d_n: Optional[int] = None
    c2_bound: float = 10.0
    neighborhood_c: float = 1.0
    tol: float = 1e-8
    max_sweeps: int = 100_000
    master_seed: int = 0
    parallel_workers: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.R < 1:
            raise ValueError("R must be >= 1")
        if self.s > self.p or self.s < 0:
            raise ValueError("need 0 <= s <= p")
        if (self.model == "ggm") != (self.experiment == "ggm"):
            raise ValueError("the ggm experiment requires model 'ggm' and vice versa")
        if isinstance(self.covariance, dict):
            object.__setattr__(self, "covariance", CovarianceSpec(**{**self.covariance, "dim": self.p}))
        elif self.covariance.dim != self.p:
            object.__setattr__(self, "covariance", replace(self.covariance, dim=self.p))
        if self.xi is not None:
            object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))
            if len(self.xi) != self.p:
                raise ValueError("xi must have length p")
        elif not 0 <= self.target_coordinate < self.p:
            raise ValueError("target_coordinate out of range")
        object.__setattr__(self, "entry", tuple(int(v) for v in self.entry))
        if len(self.entry) != 2 or not all(0 <= v < self.p for v in self.entry):
            raise ValueError("entry must be a pair of indices in [0, p)")
        if isinstance(self.perturbation, (list, tuple)):
            object.__setattr__(self, "perturbation", tuple(float(v) for v in self.perturbation))
            if len(self.perturbation) != self.p:
                raise ValueError("perturbation vector must have length p")
        elif self.perturbation not in (None, "worst"):
            raise ValueError("perturbation must be null, 'worst' or a length-p vector")
        object.__setattr__(self, "n_grid", tuple(int(v) for v in self.n_grid))
        object.__setattr__(self, "s_grid", tuple(int(v) for v in self.s_grid))
        if not 0 < self.level < 1:
            raise ValueError("level must be in (0, 1)")
        if self.sigma_noise <= 0:
            raise ValueError("sigma_noise must be > 0")

    def xi_vector(self) -> np.ndarray:
        if self.xi is not None:
            return np.array(self.xi)
        e = np.zeros(self.p)
        e[self.target_coordinate] = 1.0
        return e

    def lasso_config(self) -> LassoConfig:
        return LassoConfig(tol=self.tol, max_sweeps=self.max_sweeps, lambda_constant=self.lambda_constant)

    def echo(self) -> dict:
        """Config as plain JSON data, without runtime-only settings."""
        d = asdict(self)
        d.pop("parallel_workers")
        d["covariance"] = asdict(self.covariance)
        for k in ("xi", "entry", "n_grid", "s_grid", "perturbation"):
            if isinstance(d[k], tuple):
                d[k] = list(d[k])
        return d


SCOPE = {
    "evaluated_at": "the configured (n, beta0) points only; no uniformity over the parameter set is claimed",
    "bounds": "leading terms; vanishing remainders are not quantified",
}


@dataclass
class MonteCarloReport:
    experiment: str
    config: dict
    records: list
    aggregates: dict
    failures: int
    wall_ms: float = 0.0
    workers: int = 1

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "experiment": self.experiment,
            "config": self.config,
            "records": self.records,
            "aggregates": self.aggregates,
            "failures": self.failures,
            "scope": SCOPE,
        }
        if include_timing:
            # the only run-dependent fields; left out of canonical output
            d["runtime"] = {"wall_ms": self.wall_ms, "workers": self.workers}
        return _clean(d)

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2) + "\n"

    def write_json(self, path, include_timing: bool = True) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json(include_timing))

    def write_csv(self, path) -> None:
        keys = sorted({k for r in self.records for k in r})
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            for r in self.records:
                w.writerow({k: _csv_cell(r.get(k)) for k in keys})


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return json.dumps(v)
    return "" if v is None else v


def _clean(obj):
    """Make ``obj`` strict-JSON friendly: numpy scalars to Python, NaN/inf to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


# ---------------------------------------------------------------------------
# statistics helpers
# ---------------------------------------------------------------------------

def normality_diagnostics(samples: Sequence[float]) -> tuple[float, float, float]:
    """Kolmogorov-Smirnov distance to N(0, 1), skewness and excess kurtosis.

    Skewness and kurtosis are the moment (biased) estimators; they are NaN
    for a constant sample.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    m = x.size
    if m < 8:
        raise TooFewSamples(f"need at least 8 samples, got {m}")
    cdf = ndtr(x)
    i = np.arange(1, m + 1)
    ks = float(max(np.max(i / m - cdf), np.max(cdf - (i - 1) / m)))
    c = x - x.mean()
    m2 = float(np.mean(c**2))
    if m2 == 0.0:
        return ks, float("nan"), float("nan")
    skew = float(np.mean(c**3)) / m2**1.5
    kurt = float(np.mean(c**4)) / m2**2 - 3.0
    return ks, skew, kurt


def _mean_se(v: np.ndarray) -> tuple[float, float]:
    if v.size == 0:
        return float("nan"), float("nan")
    mean = float(np.mean(v))
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else float("nan")
    return mean, se


def _variance(v: np.ndarray) -> float:
    return float(np.var(v, ddof=1)) if v.size > 1 else float("nan")


def regime_ratio(n: int, p: int, s: int) -> float:
    """``s log(p) / sqrt(n)``; the de-sparsified theory needs this to be small."""
    return s * math.log(max(p, 2)) / math.sqrt(n)


# ---------------------------------------------------------------------------
# replicate workers
# ---------------------------------------------------------------------------

@dataclass
class _LinearContext:
    n: int
    p: int
    chol: np.ndarray
    beta_true: np.ndarray
    xi: np.ndarray
    truth: float
    lam: float
    lambda_j: float
    sigma_noise: float
    level: float
    variance_source: str
    cfg: LassoConfig
    grid_index: int
    master_seed: int
    needed: list
    fixed_x: Optional[np.ndarray] = None
    fixed_theta: Optional[np.ndarray] = None
    with_nodewise: bool = True


def _failed(r: int, exc: Exception, **extra) -> dict:
    return {"replicate": r, "failed": True, "error": f"{type(exc).__name__}: {exc}", **extra}


def _linear_replicate(ctx: _LinearContext, r: int) -> dict:
    seed = streams.derive_seed(ctx.master_seed, _KEY_REPLICATE, ctx.grid_index, r)
    try:
        if ctx.fixed_x is not None:
            x = ctx.fixed_x
        else:
            z = streams.standard_normals(streams.derive_seed(seed, streams.STREAM_DESIGN), (ctx.n, ctx.p))
            x = np.asfortranarray(z @ ctx.chol.T)
        y = simulate_linear(x, ctx.beta_true, ctx.sigma_noise, streams.derive_seed(seed, streams.STREAM_NOISE))
        fit = fit_lasso(x, y, ctx.lam, ctx.cfg)
        err = fit.beta_hat - ctx.beta_true
        rec = {
            "replicate": r,
            "failed": False,
            "n": ctx.n,
            "lambda": ctx.lam,
            "lasso_estimate": float(ctx.xi @ fit.beta_hat),
            "l1_error": float(np.abs(err).sum()),
            "lasso_l0": int(np.count_nonzero(fit.beta_hat)),
            "lasso_converged": fit.converged,
            "truth": ctx.truth,
        }
        if not ctx.with_nodewise:
            return rec
        if ctx.fixed_theta is not None:
            theta = ctx.fixed_theta
            sparsity = []
        else:
            theta = np.zeros((ctx.p, ctx.p))
            sparsity = []
            for j in ctx.needed:
                col = fit_nodewise_column(x, j, ctx.lambda_j, ctx.cfg)
                theta[:, j] = col.theta_col
                sparsity.append(col.sparsity)
        score = x.T @ (y - x @ fit.beta_hat) / ctx.n
        est = float(ctx.xi @ fit.beta_hat + (theta @ ctx.xi) @ score)
        sigma_hat = x.T @ x / ctx.n if ctx.variance_source == "sandwich" else None
        var = variance_estimate_linear(ctx.xi, theta, sigma_hat, ctx.n, ctx.sigma_noise, ctx.variance_source)
        lo, hi = confidence_interval(est, var, ctx.level)
        rec.update(
            {
                "estimate": est,
                "variance_estimate": var,
                "ci_lo": lo,
                "ci_hi": hi,
                "covered": bool(lo <= ctx.truth <= hi),
                "z": (est - ctx.truth) / math.sqrt(var) if var > 0 else float("nan"),
                "nodewise_sparsity": sparsity,
            }
        )
        return rec
    except (ArithmeticError, ValueError) as exc:
        return _failed(r, exc, n=ctx.n)


@dataclass
class _GGMContext:
    n: int
    p: int
    chol: np.ndarray
    i: int
    j: int
    truth: float
    lambda_j: float
    level: float
    cfg: LassoConfig
    master_seed: int


def _ggm_replicate(ctx: _GGMContext, r: int) -> dict:
    seed = streams.derive_seed(ctx.master_seed, _KEY_REPLICATE, 0, r)
    try:
        z = streams.standard_normals(streams.derive_seed(seed, streams.STREAM_DESIGN), (ctx.n, ctx.p))
        x = np.asfortranarray(z @ ctx.chol.T)
        ci = fit_nodewise_column(x, ctx.i, ctx.lambda_j, ctx.cfg)
        cj = ci if ctx.j == ctx.i else fit_nodewise_column(x, ctx.j, ctx.lambda_j, ctx.cfg)
        ti, tj = ci.theta_col, cj.theta_col
        sigma_hat = x.T @ x / ctx.n
        est = desparsified_entry(ti, tj, sigma_hat, ctx.i, ctx.j)
        var = (ti[ctx.i] * tj[ctx.j] + tj[ctx.i] * ti[ctx.j]) / ctx.n
        lo, hi = confidence_interval(est, max(var, 0.0), ctx.level)
        return {
            "replicate": r,
            "failed": False,
            "n": ctx.n,
            "estimate": est,
            "variance_estimate": var,
            "truth": ctx.truth,
            "ci_lo": lo,
            "ci_hi": hi,
            "covered": bool(lo <= ctx.truth <= hi),
            "z": (est - ctx.truth) / math.sqrt(var) if var > 0 else float("nan"),
            "nodewise_estimate": float(ti[ctx.j]),
            "nodewise_sparsity": [ci.sparsity, cj.sparsity],
        }
    except (ArithmeticError, ValueError) as exc:
        return _failed(r, exc, n=ctx.n)


def _run_replicates(fn, ctx, R: int, workers: int) -> list[dict]:
    work = partial(fn, ctx)
    if workers <= 1 or R == 1:
        return [work(r) for r in range(R)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, range(R), chunksize=max(1, R // (4 * workers))))


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def _inference_aggregates(records: list[dict], n: int, bound_per_sample: float, level: float) -> dict:
    ok = [r for r in records if not r["failed"]]
    est = np.array([r["estimate"] for r in ok])
    truth = np.array([r["truth"] for r in ok])
    lasso = np.array([r["lasso_estimate"] for r in ok])
    bias, bias_se = _mean_se(est - truth)
    lasso_bias, lasso_se = _mean_se(lasso - truth)
    emp_var = _variance(est)
    z = np.array([r["z"] for r in ok])
    z = z[np.isfinite(z)]
    agg = {
        "replicates_ok": len(ok),
        "mean_estimate": float(np.mean(est)) if ok else float("nan"),
        "mean_bias": bias,
        "bias_mc_se": bias_se,
        "sqrt_n_mean_bias": math.sqrt(n) * bias,
        "sqrt_n_bias_mc_se": math.sqrt(n) * bias_se,
        "empirical_variance": emp_var,
        "n_empirical_variance": n * emp_var,
        "bound_per_sample": bound_per_sample,
        "variance_ratio": n * emp_var / bound_per_sample if bound_per_sample > 0 else float("nan"),
        "mean_n_variance_estimate": n * float(np.mean([r["variance_estimate"] for r in ok])) if ok else float("nan"),
        "coverage": float(np.mean([r["covered"] for r in ok])) if ok else float("nan"),
        "coverage_mc_se": math.sqrt(level * (1 - level) / max(len(ok), 1)),
        "mean_z": float(np.mean(z)) if z.size else float("nan"),
        "var_z": _variance(z),
        "lasso_mean_bias": lasso_bias,
        "lasso_sqrt_n_mean_bias": math.sqrt(n) * lasso_bias,
        "lasso_sqrt_n_bias_mc_se": math.sqrt(n) * lasso_se,
        "mean_l1_error": float(np.mean([r["l1_error"] for r in ok])) if ok else float("nan"),
    }
    if z.size >= 8:
        agg["ks"], agg["skewness"], agg["excess_kurtosis"] = normality_diagnostics(z)
    else:
        agg["ks"] = agg["skewness"] = agg["excess_kurtosis"] = float("nan")
    return agg


def _worker_count(cfg: ExperimentConfig, workers: Optional[int]) -> int:
    return cfg.parallel_workers if workers is None else workers


def _beta0(cfg: ExperimentConfig, p: int, s: int, grid_index: int = 0) -> np.ndarray:
    include = np.flatnonzero(cfg.xi_vector())[:s].tolist() if cfg.target_in_support else []
    return make_sparse_beta(p, s, cfg.signal, streams.derive_seed(cfg.master_seed, _KEY_BETA, grid_index), include)


def _perturbation(cfg: ExperimentConfig, theta0, sigma0, beta0, xi) -> np.ndarray:
    if cfg.perturbation is None:
        return np.zeros(cfg.p)
    if cfg.perturbation == "worst":
        h = normalized_direction(theta0, xi)
        if cfg.d_n is not None:
            h = _truncate_direction(h, beta0, cfg.d_n, sigma0)
        return h
    return np.array(cfg.perturbation, dtype=np.float64)


def _truncate_direction(h, beta0, d_n, sigma0) -> np.ndarray:
    """Keep the support of ``beta0`` plus the largest remaining entries of ``h``
    so that ``beta0 + h/sqrt(n)`` has at most ``d_n`` nonzeros, then rescale to
    unit ``sigma0`` norm."""
    support = set(np.flatnonzero(beta0).tolist())
    budget = max(d_n - len(support), 0)
    outside = [k for k in np.argsort(-np.abs(h), kind="stable") if k not in support and h[k] != 0]
    keep = sorted(support | set(int(k) for k in outside[:budget]))
    out = np.zeros_like(h)
    out[keep] = h[keep]
    q = float(out @ sigma0 @ out)
    return out / math.sqrt(q) if q > 0 else out


def _linear_setup(cfg: ExperimentConfig, n: int, s: int, grid_index: int, beta_index: int = 0, with_nodewise: bool = True):
    sigma0, theta0 = build_covariance(cfg.covariance)
    chol = cholesky(sigma0)
    xi = cfg.xi_vector()
    beta0 = _beta0(cfg, cfg.p, s, beta_index)
    h = _perturbation(cfg, theta0, sigma0, beta0, xi)
    beta_true = beta0 + h / math.sqrt(n)
    lasso_cfg = cfg.lasso_config()
    p2 = max(cfg.p, 2)
    lam = default_lambda(n, p2, cfg.lambda_constant)
    lambda_j = default_lambda(n, p2, cfg.lambda_j_constant)
    needed = np.flatnonzero(xi).tolist()
    ctx = _LinearContext(
        n=n,
        p=cfg.p,
        chol=chol,
        beta_true=beta_true,
        xi=xi,
        truth=float(xi @ beta_true),
        lam=lam,
        lambda_j=lambda_j,
        sigma_noise=cfg.sigma_noise,
        level=cfg.level,
        variance_source=cfg.variance_source,
        cfg=lasso_cfg,
        grid_index=grid_index,
        master_seed=cfg.master_seed,
        needed=needed,
        with_nodewise=with_nodewise,
    )
    meta = {"beta0_support": np.flatnonzero(beta0).tolist(), "lambda": lam, "lambda_j": lambda_j}
    if cfg.model == "linear_fixed_design":
        x = sample_mvn(n, sigma0, streams.derive_seed(cfg.master_seed, _KEY_DESIGN, grid_index))
        theta = np.zeros((cfg.p, cfg.p))
        for j in needed:
            theta[:, j] = fit_nodewise_column(x, j, lambda_j, lasso_cfg).theta_col
        ctx.fixed_x = x
        ctx.fixed_theta = theta
        if len(needed) == 1 and xi[needed[0]] == 1.0:
            bound = cr_bound_fixed(x, needed[0], lambda_j, lasso_cfg, n)
            bound_per_sample = cfg.sigma_noise**2 * bound.bound_per_sample
        else:
            bound_per_sample = cfg.sigma_noise**2 * float(xi @ theta @ xi)
        meta["bound_kind"] = "fixed_design_nodewise"
    else:
        bound_per_sample = cr_bound_linear(theta0, xi, n, cfg.sigma_noise).bound_per_sample
        meta["bound_kind"] = "random_design_oracle"
    if np.any(h):
        model = ModelSet(d_n=cfg.d_n if cfg.d_n is not None else cfg.p, c2_bound=cfg.c2_bound, neighborhood_c=cfg.neighborhood_c)
        inside, diag = perturbation_admissible(beta0, h, n, model)
        meta["perturbation"] = {
            "h_sigma_norm": float(h @ sigma0 @ h),
            "h_l0": int(np.count_nonzero(h)),
            "admissible": inside,
            "membership": diag,
        }
    return ctx, bound_per_sample, meta


def _linear_block(cfg: ExperimentConfig, n: int, s: int, grid_index: int, workers: int):
    ctx, bound_per_sample, meta = _linear_setup(cfg, n, s, grid_index, beta_index=0)
    records = _run_replicates(_linear_replicate, ctx, cfg.R, workers)
    agg = _inference_aggregates(records, n, bound_per_sample, cfg.level)
    agg.update(meta)
    agg["xi_l1_norm"] = float(np.abs(ctx.xi).sum())
    agg["regime_ratio"] = regime_ratio(n, cfg.p, s)
    agg["regime_violation"] = agg["regime_ratio"] > 1.0
    return records, agg


def _finish(cfg, records, aggregates, t0, workers) -> MonteCarloReport:
    return MonteCarloReport(
        experiment=cfg.experiment,
        config=cfg.echo(),
        records=_clean(records),
        aggregates=_clean(aggregates),
        failures=sum(1 for r in records if r["failed"]),
        wall_ms=(time.perf_counter() - t0) * 1e3,
        workers=workers,
    )


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_linear_inference_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> MonteCarloReport:
    """Variance attainment and coverage of the de-sparsified functional.

    Compares ``n * Var(b_xi)`` over replicates with ``sigma^2 xi' Theta0 xi``
    (random design) or the nodewise ``theta_hat_jj`` of the frozen design.
    """
    if cfg.model not in ("linear_random_design", "linear_fixed_design"):
        raise ValueError("linear inference needs a linear model")
    t0 = time.perf_counter()
    w = _worker_count(cfg, workers)
    records, agg = _linear_block(cfg, cfg.n, cfg.s, 0, w)
    return _finish(cfg, records, agg, t0, w)


def run_local_perturbation_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> MonteCarloReport:
    """Regularity check: data under ``beta0 + h/sqrt(n)``, standardized
    statistic compared with N(0, 1). ``h`` defaults to the worst direction."""
    if cfg.perturbation is None and cfg.experiment == "local_perturbation":
        cfg = replace(cfg, perturbation="worst")
    return run_linear_inference_experiment(cfg, workers)


def run_bias_rate_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> MonteCarloReport:
    """``sqrt(n) * |mean bias|`` of the de-sparsified and plain Lasso estimates
    over ``cfg.n_grid``."""
    t0 = time.perf_counter()
    w = _worker_count(cfg, workers)
    grid = cfg.n_grid or (cfg.n,)
    records, per_n = [], []
    for g, n in enumerate(grid):
        recs, agg = _linear_block(cfg, n, cfg.s, g, w)
        for r in recs:
            r["grid_index"] = g
        records.extend(recs)
        agg["n"] = n
        per_n.append(agg)
    b = [abs(a["sqrt_n_mean_bias"]) for a in per_n]
    se = [a["sqrt_n_bias_mc_se"] for a in per_n]
    lb = [abs(a["lasso_sqrt_n_mean_bias"]) for a in per_n]
    steps = []
    for k in range(len(grid) - 1):
        slack = 2.0 * math.sqrt(se[k] ** 2 + se[k + 1] ** 2)
        steps.append(bool(b[k + 1] <= b[k] + slack))
    trend = {
        "n": list(grid),
        "sqrt_n_abs_bias": b,
        "sqrt_n_bias_mc_se": se,
        "lasso_sqrt_n_abs_bias": lb,
        "lasso_to_desparsified_ratio": [l / d if d > 0 else float("inf") for l, d in zip(lb, b)],
        "nonincreasing_within_2se": all(steps),
        "steps_ok": steps,
    }
    return _finish(cfg, records, {"grid": per_n, "trend": trend}, t0, w)


def run_oracle_inequality_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> MonteCarloReport:
    """Mean l1 error of the Lasso (and the root of its second moment) against
    ``s * lambda`` over ``cfg.s_grid``."""
    t0 = time.perf_counter()
    w = _worker_count(cfg, workers)
    grid = cfg.s_grid or (cfg.s,)
    records, per_s = [], []
    for g, s in enumerate(grid):
        ctx, _, meta = _linear_setup(cfg, cfg.n, s, g, beta_index=g, with_nodewise=False)
        recs = _run_replicates(_linear_replicate, ctx, cfg.R, w)
        for r in recs:
            r["grid_index"] = g
            r["s"] = s
        records.extend(recs)
        ok = [r for r in recs if not r["failed"]]
        e1 = np.array([r["l1_error"] for r in ok])
        slam = s * ctx.lam
        k1 = float(np.mean(e1)) if ok else float("nan")
        k2 = float(np.sqrt(np.mean(e1**2))) if ok else float("nan")
        per_s.append(
            {
                "s": s,
                "lambda": ctx.lam,
                "s_lambda": slam,
                "mean_l1_error": k1,
                "root_mean_sq_l1_error": k2,
                "ratio_k1": k1 / slam if slam > 0 else float("nan"),
                "ratio_k2": k2 / slam if slam > 0 else float("nan"),
                "median_lasso_l0": float(np.median([r["lasso_l0"] for r in ok])) if ok else float("nan"),
                "replicates_ok": len(ok),
                "beta0_support": meta["beta0_support"],
            }
        )
    summary = {}
    for key in ("ratio_k1", "ratio_k2"):
        vals = np.array([a[key] for a in per_s if math.isfinite(a[key])])
        summary[f"{key}_spread"] = float(vals.max() / vals.min()) if vals.size and vals.min() > 0 else float("nan")
    xs = np.array([a["s_lambda"] for a in per_s])
    ys = np.array([a["mean_l1_error"] for a in per_s])
    summary["slope_through_origin"] = float(xs @ ys / (xs @ xs)) if np.any(xs) else float("nan")
    return _finish(cfg, records, {"grid": per_s, "summary": summary}, t0, w)


def run_ggm_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> MonteCarloReport:
    """Variance attainment and coverage of a de-sparsified precision entry."""
    if cfg.model != "ggm":
        raise ValueError("run_ggm_experiment needs model 'ggm'")
    t0 = time.perf_counter()
    w = _worker_count(cfg, workers)
    sigma0, theta0 = build_covariance(cfg.covariance)
    i, j = cfg.entry
    n, p = cfg.n, cfg.p
    e_i, e_j = np.eye(p)[i], np.eye(p)[j]
    bound = ggm_bound(theta0, e_i, e_j, n)
    ctx = _GGMContext(
        n=n,
        p=p,
        chol=cholesky(sigma0),
        i=i,
        j=j,
        truth=float(theta0[i, j]),
        lambda_j=default_lambda(n, max(p, 2), cfg.lambda_j_constant),
        level=cfg.level,
        cfg=cfg.lasso_config(),
        master_seed=cfg.master_seed,
    )
    records = _run_replicates(_ggm_replicate, ctx, cfg.R, w)
    ok = [r for r in records if not r["failed"]]
    est = np.array([r["estimate"] for r in ok])
    bias, bias_se = _mean_se(est - ctx.truth)
    emp_var = _variance(est)
    z = np.array([r["z"] for r in ok])
    z = z[np.isfinite(z)]
    agg = {
        "replicates_ok": len(ok),
        "entry": [i, j],
        "truth": ctx.truth,
        "mean_estimate": float(np.mean(est)) if ok else float("nan"),
        "mean_bias": bias,
        "bias_mc_se": bias_se,
        "sqrt_n_mean_bias": math.sqrt(n) * bias,
        "empirical_variance": emp_var,
        "n_empirical_variance": n * emp_var,
        "bound_per_sample": bound.bound_per_sample,
        "variance_ratio": n * emp_var / bound.bound_per_sample,
        "mean_n_variance_estimate": n * float(np.mean([r["variance_estimate"] for r in ok])) if ok else float("nan"),
        "coverage": float(np.mean([r["covered"] for r in ok])) if ok else float("nan"),
        "coverage_mc_se": math.sqrt(cfg.level * (1 - cfg.level) / max(len(ok), 1)),
        "mean_z": float(np.mean(z)) if z.size else float("nan"),
        "lambda_j": ctx.lambda_j,
        "max_row_sparsity": int(np.max(np.count_nonzero(theta0, axis=0)) - 1),
    }
    if z.size >= 8:
        agg["ks"], agg["skewness"], agg["excess_kurtosis"] = normality_diagnostics(z)
    return _finish(cfg, records, agg, t0, w)


RUNNERS = {
    "inference": run_linear_inference_experiment,
    "local_perturbation": run_local_perturbation_experiment,
    "bias_rate": run_bias_rate_experiment,
    "oracle_inequality": run_oracle_inequality_experiment,
    "ggm": run_ggm_experiment,
}


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> MonteCarloReport:
    return RUNNERS[cfg.experiment](cfg, workers)


def config_field_names() -> list[str]:
    return [f.name for f in fields(ExperimentConfig)]
