"""Linear Gaussian structural equations with correlated errors.

``delta[i, j]`` is the coefficient of variable i in the equation for
variable j, and ``beta`` is the covariance of the error vector, so the
observed covariance is (I - delta)^{-T} beta (I - delta)^{-1}. Bidirected
structure lives in off-diagonal entries of beta.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .graphs import Admg, GraphError, is_acyclic


class SemParams:
    """Coefficient matrix and symmetric error covariance, stored read-only."""

    __slots__ = ("delta", "beta")

    def __init__(self, delta, beta):
        delta = np.array(delta, dtype=float)
        beta = np.array(beta, dtype=float)
        if delta.ndim != 2 or delta.shape[0] != delta.shape[1]:
            raise ValueError("delta must be a square matrix")
        if beta.shape != delta.shape:
            raise ValueError("beta must match the shape of delta")
        if not np.isfinite(delta).all() or not np.isfinite(beta).all():
            raise ValueError("parameters must be finite")
        if not np.allclose(beta, beta.T, rtol=0.0, atol=1e-8):
            raise ValueError("beta must be symmetric")
        beta = (beta + beta.T) / 2.0
        delta.setflags(write=False)
        beta.setflags(write=False)
        self.delta = delta
        self.beta = beta

    @property
    def d(self) -> int:
        return self.delta.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SemParams):
            return NotImplemented
        return np.array_equal(self.delta, other.delta) and np.array_equal(
            self.beta, other.beta
        )

    def __repr__(self):
        return f"SemParams(d={self.d})"


class Dataset:
    """An n x d sample with column names and a cached covariance.

    The covariance is mean-centered with divisor n, matching the zero-mean
    Gaussian likelihood used throughout.
    """

    __slots__ = ("X", "names", "_cov")

    def __init__(self, X, names: Optional[Sequence[str]] = None):
        X = np.array(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("data must be a 2-d array")
        if X.shape[0] < 2:
            raise ValueError("at least two samples are required")
        if not np.isfinite(X).all():
            raise ValueError("data must be finite")
        d = X.shape[1]
        if names is None:
            names = [f"V{i + 1}" for i in range(d)]
        names = [str(nm) for nm in names]
        if len(names) != d:
            raise ValueError(f"expected {d} column names, got {len(names)}")
        if len(set(names)) != d:
            raise ValueError("column names must be unique")
        X.setflags(write=False)
        self.X = X
        self.names = tuple(names)
        self._cov = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def cov(self) -> np.ndarray:
        if self._cov is None:
            centered = self.X - self.X.mean(axis=0)
            S = centered.T @ centered / self.n
            S = (S + S.T) / 2.0
            S.setflags(write=False)
            self._cov = S
        return self._cov


def implied_covariance(params: SemParams) -> np.ndarray:
    """(I - delta)^{-T} beta (I - delta)^{-1}, symmetrized exactly."""
    A = np.eye(params.d) - params.delta
    right = np.linalg.solve(A.T, params.beta)  # A^{-T} beta
    sigma = np.linalg.solve(A.T, right.T).T
    return (sigma + sigma.T) / 2.0


def sample_data(
    params: SemParams,
    n: int,
    rng: np.random.Generator,
    names: Optional[Sequence[str]] = None,
) -> Dataset:
    """Draw n rows: noise from N(0, beta), then solve the structural equations."""
    if n < 2:
        raise ValueError("need at least two samples")
    L = np.linalg.cholesky(params.beta)
    noise = rng.standard_normal((n, params.d)) @ L.T
    A = np.eye(params.d) - params.delta
    X = np.linalg.solve(A.T, noise.T).T
    return Dataset(X, names)


def random_parameters(g: Admg, rng: np.random.Generator) -> SemParams:
    """Random coefficients on the support of a graph.

    Directed coefficients have magnitude in [0.5, 2.0] and error
    covariances magnitude in [0.4, 0.7], both with uniform signs. Each
    error variance is a draw from [0.7, 1.2] plus the absolute row sum,
    which makes beta diagonally dominant and hence positive definite.
    """
    if not is_acyclic(g.directed):
        raise GraphError("random parameters require an acyclic graph")
    d = g.d
    delta = np.zeros((d, d))
    edges = np.argwhere(g.directed)
    if len(edges):
        mags = rng.uniform(0.5, 2.0, size=len(edges))
        signs = rng.integers(0, 2, size=len(edges)) * 2 - 1
        delta[edges[:, 0], edges[:, 1]] = mags * signs
    beta = np.zeros((d, d))
    pairs = np.argwhere(np.triu(g.bidirected))
    if len(pairs):
        mags = rng.uniform(0.4, 0.7, size=len(pairs))
        signs = rng.integers(0, 2, size=len(pairs)) * 2 - 1
        vals = mags * signs
        beta[pairs[:, 0], pairs[:, 1]] = vals
        beta[pairs[:, 1], pairs[:, 0]] = vals
    base = rng.uniform(0.7, 1.2, size=d)
    np.fill_diagonal(beta, base + np.abs(beta).sum(axis=1))
    return SemParams(delta, beta)


def gaussian_neg2_loglik(data: Dataset, params: SemParams) -> float:
    """-2 log likelihood of zero-mean Gaussian data under the model."""
    sigma = implied_covariance(params)
    chol = scipy.linalg.cho_factor(sigma, lower=True)
    logdet = 2.0 * np.log(np.diag(chol[0])).sum()
    trace_term = np.trace(scipy.linalg.cho_solve(chol, data.cov))
    d = params.d
    return float(data.n * (logdet + trace_term + d * np.log(2.0 * np.pi)))


def standardize(
    params: SemParams, sigma: Optional[np.ndarray] = None
) -> tuple[SemParams, np.ndarray]:
    """Rescale parameters and covariance to unit-variance (correlation) scale.

    With scales s = sqrt(diag(sigma)): delta[i, j] -> delta[i, j] s_i / s_j,
    beta[i, j] -> beta[i, j] / (s_i s_j), sigma -> correlation matrix. The
    rescaled triple is again a consistent model, now over standardized
    variables.
    """
    if sigma is None:
        sigma = implied_covariance(params)
    scales = np.sqrt(np.diag(sigma))
    delta_std = params.delta * scales[:, None] / scales[None, :]
    beta_std = params.beta / np.outer(scales, scales)
    sigma_std = sigma / np.outer(scales, scales)
    return SemParams(delta_std, beta_std), sigma_std


def verma_residual(sigma: np.ndarray, params: SemParams) -> float:
    """Polynomial that vanishes when C -> B is absent in the four-variable graph
    A -> C -> D -> B with A <-> B and A <-> D, for standardized inputs.

    Vertex order is (A, B, C, D). The quantity is the difference between
    the B-C covariance and the three treks connecting B and C, which is
    the equality constraint encoded by the missing C -> B edge.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (4, 4) or params.d != 4:
        raise ValueError("the residual is defined for four variables (A, B, C, D)")
    delta, beta = params.delta, params.beta
    a, b, c, d = 0, 1, 2, 3
    return float(
        sigma[b, c]
        - delta[c, d] * delta[d, b]
        - delta[a, c] * beta[a, b]
        - delta[a, c] * beta[a, d] * delta[d, b]
    )
