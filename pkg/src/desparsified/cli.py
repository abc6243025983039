"""Command-line front end.

Usage::

    desparsified SUBCOMMAND --config PATH [--out PATH] [--set key=value ...] [--workers N]

Configs are strict JSON objects: unknown or duplicate keys are rejected.
Relative ``*_path`` inputs are resolved against the config's directory.
Exit status is 0 on success, 1 on usage or config errors and 2 on runtime
errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import MISSING, asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import bounds
from .datagen import CovarianceSpec, LinearModelSpec, build_covariance, export_dataset, generate_dataset
from .errors import ConfigParseError
from .harness import ExperimentConfig, run_experiment
from .inference import desparsified_precision, infer_linear, precision_entry_inference
from .lasso import LassoConfig, default_lambda
from .linalg import as_matrix, gram, invert_spd, read_matrix_csv, read_vector_csv, write_matrix_csv
from .nodewise import fit_nodewise, fit_nodewise_column

SQRT2 = math.sqrt(2.0)


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class EstimateConfig:
    x_path: str = ""
    y_path: str = ""
    coordinates: tuple = (0,)
    xi: Optional[tuple] = None
    lam: Optional[float] = None
    lambda_constant: float = SQRT2
    lambda_j_constant: float = SQRT2
    theta: str = "nodewise"
    sigma_noise: float = 1.0
    level: float = 0.95
    variance_source: str = "plug_in_theta_diag"
    tol: float = 1e-8
    max_sweeps: int = 100_000


@dataclass(frozen=True)
class NodewiseConfig:
    x_path: str = ""
    lambda_j: Optional[float] = None
    lambda_j_constant: float = SQRT2
    theta_out: Optional[str] = None
    tol: float = 1e-8
    max_sweeps: int = 100_000


@dataclass(frozen=True)
class GGMConfig:
    x_path: str = ""
    entry: tuple = (0, 1)
    level: float = 0.95
    lambda_j: Optional[float] = None
    lambda_j_constant: float = SQRT2
    t_out: Optional[str] = None
    tol: float = 1e-8
    max_sweeps: int = 100_000


@dataclass(frozen=True)
class BoundConfig:
    kind: str = "linear"
    theta0: Optional[tuple] = None
    theta0_path: Optional[str] = None
    covariance: Optional[dict] = None
    xi: Optional[tuple] = None
    xi2: Optional[tuple] = None
    n: int = 100
    p: Optional[int] = None
    s: int = 0
    sigma_noise: float = 1.0
    x_path: Optional[str] = None
    j: int = 0
    lambda_j: Optional[float] = None
    lambda_j_constant: float = SQRT2


@dataclass(frozen=True)
class DatasetConfig:
    n: int = 100
    p: int = 50
    s: int = 2
    signal: float = 1.0
    sigma_noise: float = 1.0
    covariance: dict = field(default_factory=lambda: {"family": "identity"})
    seed: int = 0


CONFIG_TYPES = {
    "estimate": EstimateConfig,
    "nodewise": NodewiseConfig,
    "ggm": GGMConfig,
    "bound": BoundConfig,
    "experiment": ExperimentConfig,
    "dataset": DatasetConfig,
}

BOUND_KINDS = ("linear", "fixed", "ggm", "lecam", "minimax", "worst_direction", "compatibility")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ConfigParseError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _default_of(f):
    if f.default is not MISSING:
        return f.default
    if f.default_factory is not MISSING:
        return f.default_factory()
    return MISSING


def _jsonable(v):
    if hasattr(v, "__dataclass_fields__"):
        return asdict(v)
    if isinstance(v, tuple):
        return list(v)
    return v


def describe_keys(kind: str) -> str:
    lines = []
    for f in fields(CONFIG_TYPES[kind]):
        d = _default_of(f)
        shown = "(required)" if d is MISSING else json.dumps(_jsonable(d))
        lines.append(f"  {f.name} = {shown}")
    return "\n".join(lines)


def _parse_override(item: str):
    if "=" not in item:
        raise ConfigParseError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _apply_override(data: dict, key: str, value) -> None:
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigParseError(f"override {key!r}: {part!r} is not an object")
    node[parts[-1]] = value


_SCALAR_TYPES = {
    "int": (int,),
    "float": (int, float),
    "str": (str,),
    "bool": (bool,),
    "tuple": (list, tuple),
    "dict": (dict,),
    "CovarianceSpec": (dict,),
}


def _check_type(key: str, annotation: str, value) -> None:
    ann = annotation.strip()
    if ann.startswith("Optional[") and ann.endswith("]"):
        if value is None:
            return
        ann = ann[len("Optional["):-1]
    allowed = _SCALAR_TYPES.get(ann)
    if allowed is None:
        return
    if isinstance(value, bool) and bool not in allowed:
        raise ConfigParseError(f"key {key!r}: expected {ann}, got boolean")
    if not isinstance(value, allowed):
        raise ConfigParseError(f"key {key!r}: expected {ann}, got {type(value).__name__} {value!r}")


def load_config(path, kind: str = "experiment", overrides=()):
    """Parse a JSON config for ``kind`` strictly and apply ``key=value``
    overrides (dotted keys reach into nested objects)."""
    cls = CONFIG_TYPES[kind]
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigParseError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        data = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except ConfigParseError as exc:
        raise ConfigParseError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigParseError(f"{path}: top level must be a JSON object")
    for item in overrides:
        _apply_override(data, *_parse_override(item))
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigParseError(f"{path}: unknown key(s) {', '.join(map(repr, unknown))} for '{kind}'")
    for f in fields(cls):
        if f.name in data:
            try:
                _check_type(f.name, str(f.type), data[f.name])
            except ConfigParseError as exc:
                raise ConfigParseError(f"{path}: {exc}") from None
    if kind == "experiment" and isinstance(data.get("covariance"), dict):
        cov_known = {f.name for f in fields(CovarianceSpec)}
        bad = sorted(set(data["covariance"]) - cov_known)
        if bad:
            raise ConfigParseError(f"{path}: unknown covariance key(s) {', '.join(map(repr, bad))}")
    data = {k: tuple(v) if isinstance(v, list) and k != "theta0" else v for k, v in data.items()}
    # input files are looked up next to the config unless given absolutely
    base = os.path.dirname(os.path.abspath(path))
    for k, v in data.items():
        if k.endswith("_path") and isinstance(v, str) and v and not os.path.isabs(v):
            data[k] = os.path.join(base, v)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigParseError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _lasso_cfg(c) -> LassoConfig:
    return LassoConfig(tol=c.tol, max_sweeps=c.max_sweeps, lambda_constant=getattr(c, "lambda_constant", SQRT2))


def _lambda_j(c, n, p) -> float:
    return c.lambda_j if c.lambda_j is not None else default_lambda(n, max(p, 2), c.lambda_j_constant)


def cmd_estimate(c: EstimateConfig, workers: int) -> dict:
    x = read_matrix_csv(c.x_path)
    y = read_vector_csv(c.y_path)
    n, p = x.shape
    if c.xi is not None:
        xis = [np.asarray(c.xi, dtype=np.float64)]
    else:
        xis = [np.eye(p)[int(j)] for j in c.coordinates]
    if c.theta not in ("nodewise", "gram_inverse"):
        raise ConfigParseError("theta must be 'nodewise' or 'gram_inverse'")
    theta = invert_spd(gram(x)) if c.theta == "gram_inverse" else None
    lam_j = default_lambda(n, max(p, 2), c.lambda_j_constant)
    ests, fit, theta_hat = infer_linear(
        x,
        y,
        xis,
        lam=c.lam,
        lambda_j=lam_j,
        cfg=_lasso_cfg(c),
        sigma_noise=c.sigma_noise,
        level=c.level,
        variance_source=c.variance_source,
        theta_hat=theta,
    )
    out = {
        "n": n,
        "p": p,
        "theta": c.theta,
        "lasso": fit.to_dict(),
        "estimates": [e.to_dict() for e in ests],
    }
    if c.xi is None:
        for e, j in zip(out["estimates"], c.coordinates):
            e["coordinate"] = int(j)
    return out


def cmd_nodewise(c: NodewiseConfig, workers: int) -> dict:
    x = read_matrix_csv(c.x_path)
    n, p = x.shape
    fit = fit_nodewise(x, _lambda_j(c, n, p), _lasso_cfg(c), workers=workers)
    if c.theta_out:
        write_matrix_csv(c.theta_out, fit.theta_hat)
    out = {
        "n": n,
        "p": p,
        "lambda_j": [col.lambda_j for col in fit.columns],
        "tau_sq": [col.tau_sq for col in fit.columns],
        "sparsity": [col.sparsity for col in fit.columns],
        "converged": [col.lasso.converged for col in fit.columns],
        "max_surrogate_violation": fit.max_surrogate_violation,
    }
    if p <= bounds.INLINE_DIRECTION_MAX_P:
        out["theta_hat"] = fit.theta_hat.tolist()
    return out


def cmd_ggm(c: GGMConfig, workers: int) -> dict:
    x = read_matrix_csv(c.x_path)
    n, p = x.shape
    i, j = (int(v) for v in c.entry)
    sigma_hat = gram(x)
    if c.t_out:
        fit = fit_nodewise(x, _lambda_j(c, n, p), _lasso_cfg(c), workers=workers)
        theta = fit.theta_hat
        t_hat = desparsified_precision(theta, sigma_hat)
        write_matrix_csv(c.t_out, t_hat)
    else:
        theta = np.zeros((p, p))
        for k in {i, j}:
            theta[:, k] = fit_nodewise_column(x, k, _lambda_j(c, n, p), _lasso_cfg(c)).theta_col
        t_hat = desparsified_precision(theta, sigma_hat)
    est = precision_entry_inference(t_hat, theta, i, j, n, c.level)
    return {"n": n, "p": p, "entry": [i, j], "estimate": est.to_dict()}


def _theta0_from(c: BoundConfig) -> np.ndarray:
    if c.theta0 is not None:
        return as_matrix(c.theta0, "theta0")
    if c.theta0_path:
        return read_matrix_csv(c.theta0_path)
    if c.covariance is not None:
        spec = CovarianceSpec(**{"dim": c.p or 1, **c.covariance})
        return build_covariance(spec)[1]
    raise ConfigParseError("bound needs one of theta0, theta0_path or covariance")


def _unit_or(vec, p, j=0):
    if vec is not None:
        return np.asarray(vec, dtype=np.float64)
    return np.eye(p)[j]


def cmd_bound(c: BoundConfig, workers: int) -> dict:
    if c.kind not in BOUND_KINDS:
        raise ConfigParseError(f"kind must be one of {BOUND_KINDS}")
    if c.kind == "minimax":
        if c.p is None:
            raise ConfigParseError("minimax needs p")
        return {"kind": "minimax", "n": c.n, "p": c.p, "s": c.s, "rate": bounds.minimax_rate(c.n, c.p, c.s)}
    if c.kind == "fixed":
        if not c.x_path:
            raise ConfigParseError("fixed-design bound needs x_path")
        x = read_matrix_csv(c.x_path)
        n, p = x.shape
        b = bounds.cr_bound_fixed(x, c.j, _lambda_j(c, n, p), LassoConfig(), c.n if c.n else n)
        return {"kind": "fixed", "j": c.j, **b.to_dict()}
    theta0 = _theta0_from(c)
    p = theta0.shape[0]
    if c.kind == "compatibility":
        sigma0 = invert_spd(theta0)
        return {"kind": "compatibility", "lower_bound": bounds.compatibility_lower_bound(sigma0)}
    xi = _unit_or(c.xi, p, c.j)
    if c.kind == "linear":
        return {"kind": "linear", **bounds.cr_bound_linear(theta0, xi, c.n, c.sigma_noise).to_dict()}
    if c.kind == "ggm":
        xi2 = _unit_or(c.xi2, p, c.j)
        return {"kind": "ggm", **bounds.ggm_bound(theta0, xi, xi2, c.n).to_dict()}
    if c.kind == "lecam":
        fisher = invert_spd(theta0)
        return {"kind": "lecam", "bound_per_sample": bounds.lecam_bound(fisher, xi)}
    return {
        "kind": "worst_direction",
        "worst_subdirection": bounds.worst_subdirection(theta0, xi).tolist(),
        "normalized_direction": bounds.normalized_direction(theta0, xi).tolist(),
    }


def cmd_dataset(c: DatasetConfig, out_dir: str) -> dict:
    cov = CovarianceSpec(**{**c.covariance, "dim": c.p})
    spec = LinearModelSpec(n=c.n, p=c.p, s=c.s, signal=c.signal, sigma_noise=c.sigma_noise, covariance=cov, seed=c.seed)
    return export_dataset(generate_dataset(spec), spec, out_dir)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="desparsified",
        description="De-sparsified Lasso inference, nodewise precision estimation, efficiency bounds "
        "and Monte Carlo verification.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", parser_class=_Parser)
    helps = {
        "estimate": "de-biased inference for coordinates or a linear functional",
        "nodewise": "nodewise surrogate inverse and its KKT certificate",
        "ggm": "de-sparsified precision matrix entry with confidence interval",
        "bound": "efficiency bound calculators",
        "experiment": "Monte Carlo experiment",
        "dataset": "synthetic dataset export (--out is a directory)",
    }
    for name, text in helps.items():
        sp = sub.add_parser(
            name,
            help=text,
            description=text,
            epilog="config keys and defaults:\n" + describe_keys(name),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        sp.add_argument("--config", required=True, metavar="PATH", help="JSON config file")
        sp.add_argument("--out", metavar="PATH", help="output path (default: standard output)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        sp.add_argument("--workers", type=int, default=None, metavar="N", help="parallel workers")
        if name == "experiment":
            sp.add_argument("--csv", metavar="PATH", help="also write per-replicate records as CSV")
            sp.add_argument(
                "--timing",
                action="store_true",
                help="add the run-dependent 'runtime' block (wall time, workers) to the report",
            )
    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    from .harness import _clean

    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else 1
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg = load_config(args.config, args.subcommand, args.set)
    except ConfigParseError as exc:
        print(f"desparsified: config error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.subcommand == "experiment":
            workers = args.workers if args.workers is not None else cfg.parallel_workers
            print(f"desparsified: running {cfg.experiment} (R={cfg.R})", file=sys.stderr)
            report = run_experiment(cfg, workers)
            print(f"desparsified: done in {report.wall_ms:.0f} ms with {report.workers} worker(s)", file=sys.stderr)
            _emit(report.to_json(include_timing=args.timing), args.out)
            if args.csv:
                report.write_csv(args.csv)
            return 0
        workers = args.workers or 1
        if args.subcommand == "dataset":
            if not args.out:
                raise UsageError("dataset needs --out DIRECTORY")
            manifest = cmd_dataset(cfg, args.out)
            sys.stdout.write(_dumps(manifest))
            return 0
        handler = {"estimate": cmd_estimate, "nodewise": cmd_nodewise, "ggm": cmd_ggm, "bound": cmd_bound}[args.subcommand]
        _emit(_dumps(handler(cfg, workers)), args.out)
        return 0
    except UsageError as exc:
        print(f"desparsified: {exc}", file=sys.stderr)
        return 1
    except ConfigParseError as exc:
        print(f"desparsified: config error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ArithmeticError, ValueError, IndexError) as exc:
        print(f"desparsified: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
