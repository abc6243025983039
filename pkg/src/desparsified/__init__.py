"""De-sparsified Lasso inference, nodewise precision estimation and
efficiency-bound calculators, with a Monte Carlo verification harness."""

from .errors import (
    ConfigParseError,
    DegenerateNoise,
    DimensionMismatch,
    IndexOutOfRange,
    InvalidLevel,
    NegativeVariance,
    NotPositiveDefinite,
    SparsityExceedsDim,
    TooFewSamples,
    ZeroGradient,
)
from .lasso import LassoConfig, LassoFit, default_lambda, fit_lasso, kkt_residual, soft_threshold
from .nodewise import (
    NodewiseColumnFit,
    NodewiseFit,
    assemble_theta,
    fit_nodewise,
    fit_nodewise_column,
    surrogate_inverse_violation,
)
from .inference import (
    DebiasedEstimate,
    PrecisionEstimate,
    confidence_interval,
    desparsified_lasso,
    desparsified_precision,
    functional_estimate,
    infer_linear,
    precision_entry_inference,
    variance_estimate_linear,
)

__version__ = "0.1.0"
