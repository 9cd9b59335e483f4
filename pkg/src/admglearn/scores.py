"""Model-selection scores: exact BIC and its smooth tanh approximation.

Free parameters of a d-variable model are the d(d-1) off-diagonal
coefficients, the d(d-1)/2 tied off-diagonal error covariances (each
symmetric pair counts once), and the d error variances. The variances are
treated as always present when counting nonzeros: every variable keeps an
error term regardless of sparsity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sem import Dataset, SemParams, gaussian_neg2_loglik


@dataclass(frozen=True)
class ScoreConfig:
    """``lam`` weights the smooth sparsity term; ``c_sharpness`` controls how
    closely tanh(c|x|) tracks the nonzero indicator and defaults to ln(n);
    ``zero_tol`` decides what counts as a nonzero parameter in the BIC."""

    lam: float = 0.05
    c_sharpness: Optional[float] = None
    zero_tol: float = 0.05

    def __post_init__(self):
        if self.lam < 0 or self.zero_tol < 0:
            raise ValueError("lam and zero_tol must be non-negative")
        if self.c_sharpness is not None and self.c_sharpness <= 0:
            raise ValueError("c_sharpness must be positive")


def free_parameter_vector(params: SemParams) -> np.ndarray:
    """All free entries: off-diagonal delta, tied upper beta, beta diagonal."""
    d = params.d
    off = ~np.eye(d, dtype=bool)
    upper = np.triu_indices(d, k=1)
    return np.concatenate(
        [params.delta[off], params.beta[upper], np.diag(params.beta)]
    )


def count_nonzero_params(params: SemParams, zero_tol: float) -> int:
    d = params.d
    off = ~np.eye(d, dtype=bool)
    upper = np.triu_indices(d, k=1)
    n_delta = int((np.abs(params.delta[off]) > zero_tol).sum())
    n_beta = int((np.abs(params.beta[upper]) > zero_tol).sum())
    return n_delta + n_beta + d


def bic(data: Dataset, params: SemParams, cfg: ScoreConfig | None = None) -> float:
    cfg = cfg or ScoreConfig()
    nll = gaussian_neg2_loglik(data, params)
    return nll + np.log(data.n) * count_nonzero_params(params, cfg.zero_tol)


def abic(data: Dataset, params: SemParams, cfg: ScoreConfig | None = None) -> float:
    cfg = cfg or ScoreConfig()
    c = cfg.c_sharpness if cfg.c_sharpness is not None else np.log(data.n)
    nll = gaussian_neg2_loglik(data, params)
    theta = free_parameter_vector(params)
    return float(nll + cfg.lam * np.tanh(c * np.abs(theta)).sum())
