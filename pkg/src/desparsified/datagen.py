"""Synthetic Gaussian designs, sparse coefficient vectors and linear-model
responses.

All generators are deterministic functions of their arguments and an integer
seed (see :mod:`desparsified.streams`).
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import streams
from .errors import DimensionMismatch, NotPositiveDefinite, SparsityExceedsDim
from .linalg import as_matrix, as_vector, cholesky, invert_spd, write_matrix_csv

FAMILIES = ("identity", "toeplitz", "equicorrelation", "banded_precision")


@dataclass(frozen=True)
class CovarianceSpec:
    """Covariance family of the Gaussian design rows.

    ``toeplitz`` has entries ``rho**|i-j|``; ``equicorrelation`` has unit
    diagonal and constant off-diagonal ``rho``; ``banded_precision`` puts
    ``off_diag`` on every precision entry with ``0 < |i-j| <= bandwidth`` and
    ones on the diagonal, and the covariance is its inverse.
    """

    family: str = "identity"
    dim: int = 1
    rho: float = 0.0
    bandwidth: int = 1
    off_diag: float = 0.3

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown covariance family {self.family!r}; expected one of {FAMILIES}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not abs(self.rho) < 1:
            raise ValueError("|rho| must be < 1")
        if self.bandwidth < 0:
            raise ValueError("bandwidth must be >= 0")


def build_covariance(spec: CovarianceSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(sigma0, theta0)`` for ``spec``; raises NotPositiveDefinite."""
    p = spec.dim
    idx = np.arange(p)
    lag = np.abs(idx[:, None] - idx[None, :])
    if spec.family == "identity":
        return np.eye(p), np.eye(p)
    if spec.family == "toeplitz":
        sigma = spec.rho ** lag.astype(np.float64)
    elif spec.family == "equicorrelation":
        sigma = np.full((p, p), float(spec.rho))
        np.fill_diagonal(sigma, 1.0)
    else:
        theta = np.where((lag > 0) & (lag <= spec.bandwidth), float(spec.off_diag), 0.0)
        np.fill_diagonal(theta, 1.0)
        # theta0 is returned exactly banded, sigma0 is its inverse
        return invert_spd(theta), theta
    theta = invert_spd(sigma)
    if np.linalg.eigvalsh(sigma)[0] <= 0:
        raise NotPositiveDefinite(f"{spec.family}({spec.rho}) is not positive definite at p={p}")
    return sigma, theta


def sample_mvn(n: int, sigma0, seed: int) -> np.ndarray:
    """``n`` i.i.d. rows from N(0, sigma0), generated as ``L z``."""
    L = cholesky(sigma0)
    p = L.shape[0]
    z = streams.standard_normals(seed, (n, p))
    return np.asfortranarray(z @ L.T)


def make_sparse_beta(p: int, s: int, signal: float, seed: int, include: Sequence[int] = ()) -> np.ndarray:
    """Vector with exactly ``s`` nonzeros of magnitude ``signal/sqrt(s)``.

    Support positions are drawn from ``seed``; indices in ``include`` are
    always part of the support. Signs alternate along the sorted support, so
    ``||beta||_2 == signal``.
    """
    if s > p or s < 0:
        raise SparsityExceedsDim(f"s={s} not in [0, p={p}]")
    include = list(dict.fromkeys(int(i) for i in include))
    if len(include) > s:
        raise SparsityExceedsDim(f"cannot force {len(include)} indices into a support of size {s}")
    if any(not 0 <= i < p for i in include):
        raise IndexError("include index out of range")
    beta = np.zeros(p)
    if s == 0:
        return beta
    forced = set(include)
    rest = [int(k) for k in streams.permutation(seed, p) if int(k) not in forced]
    support = np.sort(np.array(include + rest[: s - len(include)], dtype=np.int64))
    signs = np.where(np.arange(s) % 2 == 0, 1.0, -1.0)
    beta[support] = signs * (signal / np.sqrt(s))
    return beta


def simulate_linear(x, beta0, sigma_noise: float, seed: int) -> np.ndarray:
    """Response ``x @ beta0 + sigma_noise * z`` with standard normal ``z``."""
    x = as_matrix(x, "x")
    beta0 = as_vector(beta0, "beta0")
    if x.shape[1] != beta0.size:
        raise DimensionMismatch(f"x has {x.shape[1]} columns but beta0 has length {beta0.size}")
    if not sigma_noise > 0:
        raise ValueError("sigma_noise must be > 0")
    return x @ beta0 + sigma_noise * streams.standard_normals(seed, x.shape[0])


@dataclass(frozen=True)
class LinearModelSpec:
    n: int
    p: int
    s: int
    signal: float = 1.0
    sigma_noise: float = 1.0
    covariance: CovarianceSpec = field(default_factory=CovarianceSpec)
    seed: int = 0

    def __post_init__(self):
        if self.s > self.p:
            raise SparsityExceedsDim(f"s={self.s} exceeds p={self.p}")
        if not self.sigma_noise > 0:
            raise ValueError("sigma_noise must be > 0")
        if self.covariance.dim != self.p:
            object.__setattr__(self, "covariance", CovarianceSpec(**{**asdict(self.covariance), "dim": self.p}))


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    beta0: np.ndarray
    sigma0: np.ndarray
    theta0: np.ndarray
    seed: int


def generate_dataset(spec: LinearModelSpec, include: Sequence[int] = ()) -> Dataset:
    sigma0, theta0 = build_covariance(spec.covariance)
    beta0 = make_sparse_beta(spec.p, spec.s, spec.signal, streams.derive_seed(spec.seed, streams.STREAM_SUPPORT), include)
    x = sample_mvn(spec.n, sigma0, streams.derive_seed(spec.seed, streams.STREAM_DESIGN))
    y = simulate_linear(x, beta0, spec.sigma_noise, streams.derive_seed(spec.seed, streams.STREAM_NOISE))
    return Dataset(x=x, y=y, beta0=beta0, sigma0=sigma0, theta0=theta0, seed=spec.seed)


def export_dataset(dataset: Dataset, spec: Optional[LinearModelSpec], out_dir) -> dict:
    """Write X, Y, beta0, Sigma0, Theta0 as CSV files plus ``manifest.json``."""
    os.makedirs(out_dir, exist_ok=True)
    files = {"x": "X.csv", "y": "Y.csv", "beta0": "beta0.csv", "sigma0": "Sigma0.csv", "theta0": "Theta0.csv"}
    write_matrix_csv(os.path.join(out_dir, files["x"]), dataset.x)
    write_matrix_csv(os.path.join(out_dir, files["y"]), dataset.y[:, None])
    write_matrix_csv(os.path.join(out_dir, files["beta0"]), dataset.beta0[:, None])
    write_matrix_csv(os.path.join(out_dir, files["sigma0"]), dataset.sigma0)
    write_matrix_csv(os.path.join(out_dir, files["theta0"]), dataset.theta0)
    manifest = {"spec": asdict(spec) if spec is not None else None, "seed": dataset.seed, "files": files}
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
