"""Differentiable penalties that vanish exactly on a target graph class.

All penalties operate on non-negative matrices. Walk counts are taken
either from a truncated exponential series sum_k A^k / k! or from the
numerically friendlier matrix power (I + cA)^d; both have positive
entries exactly where walks of length <= d exist, so they agree on the
zero set. ``trace(walks(D)) - d`` vanishes iff the support of D is
acyclic; adding ``sum(walks(D) o B)`` extends that to ancestrality and
``sum(D o B)`` to bow-freeness.

The c-tree penalty (:func:`greenery`) is subtler. For each root it
repeatedly soft-deletes incoming edges of vertices that look primal
fixable (row sums of walks(B_f) o D_f near zero), shielding the root by
adding one to its own entry before the tanh squashing. After d - 1
rounds the surviving directed-and-bidirected walks into the root are
summed; the total exceeds d exactly when some root sits on top of a
c-tree. Gradients are computed by reverse accumulation through the loop.

Applied to squared SEM coefficient matrices (delta o delta and the
squared off-diagonal error covariance), a zero penalty certifies that
the induced graph lies in the class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .graphs import GraphClass
from .sem import SemParams


class PenaltyMode(Enum):
    MATRIX_POWER = "power"
    MATRIX_EXPONENTIAL = "exp"

    @classmethod
    def parse(cls, text: str) -> "PenaltyMode":
        key = text.strip().lower()
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown penalty mode {text!r}; expected 'power' or 'exp'")


@dataclass(frozen=True)
class PenaltyConfig:
    """Constants of the penalty family.

    ``c_directed``/``c_bidirected`` scale the matrix-power form for walk
    counts over directed and bidirected parts; ``tanh_scale`` sharpens the
    soft primal-fixability mask inside the c-tree penalty;
    ``exp_series_terms`` truncates the exponential series (and must be at
    least the matrix dimension wherever it is used).
    """

    mode: PenaltyMode = PenaltyMode.MATRIX_POWER
    c_directed: float = 1.0
    c_bidirected: float = 2.0
    tanh_scale: float = math.log(5000.0)
    exp_series_terms: int = 20

    def __post_init__(self):
        if self.c_directed <= 0 or self.c_bidirected <= 0:
            raise ValueError("power-form constants must be positive")
        if self.tanh_scale <= 0:
            raise ValueError("tanh_scale must be positive")
        if self.exp_series_terms < 1:
            raise ValueError("exp_series_terms must be positive")


DEFAULT_CONFIG = PenaltyConfig()


def _as_nonneg(A, what: str) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{what} must be a square matrix")
    if np.any(A < 0):
        raise ValueError(f"{what} must be entrywise non-negative")
    return A


def _check_symmetric(B, what: str) -> None:
    if not np.allclose(B, B.T, rtol=0.0, atol=1e-12):
        raise ValueError(f"{what} must be symmetric")


def _check_exp_terms(cfg: PenaltyConfig, d: int) -> None:
    if cfg.mode is PenaltyMode.MATRIX_EXPONENTIAL and cfg.exp_series_terms < d:
        raise ValueError(
            f"exp_series_terms={cfg.exp_series_terms} is below the matrix dimension {d}"
        )


def _walk_matrix(A: np.ndarray, c: float, cfg: PenaltyConfig) -> np.ndarray:
    d = A.shape[0]
    if cfg.mode is PenaltyMode.MATRIX_POWER:
        return np.linalg.matrix_power(np.eye(d) + c * A, d)
    term = np.eye(d)
    total = np.eye(d)
    for k in range(1, cfg.exp_series_terms + 1):
        term = term @ A / k
        total = total + term
    return total


def _walk_matrix_vjp(
    A: np.ndarray, c: float, U: np.ndarray, cfg: PenaltyConfig
) -> np.ndarray:
    """Gradient of sum(walks(A) o U) with respect to A."""
    d = A.shape[0]
    if cfg.mode is PenaltyMode.MATRIX_POWER:
        XT = (np.eye(d) + c * A).T
        right = [np.eye(d)]
        for _ in range(d - 1):
            right.append(right[-1] @ XT)
        out = np.zeros((d, d))
        left = U
        for k in range(d):
            out += left @ right[d - 1 - k]
            if k < d - 1:
                left = XT @ left
        return c * out
    K = cfg.exp_series_terms
    AT = A.T
    # tail[j] = sum_{m=0}^{K-1-j} AT^m / (m + j + 1)!, built backwards
    tails = [None] * K
    tails[K - 1] = np.eye(d) / math.factorial(K)
    for j in range(K - 2, -1, -1):
        tails[j] = np.eye(d) / math.factorial(j + 1) + AT @ tails[j + 1]
    out = np.zeros((d, d))
    left = U
    for j in range(K):
        out += left @ tails[j]
        if j < K - 1:
            left = AT @ left
    return out


def acyclicity_penalty(D, cfg: PenaltyConfig | None = None) -> float:
    """Weighted count of directed cycles; zero iff the support is acyclic."""
    cfg = cfg or DEFAULT_CONFIG
    D = _as_nonneg(D, "directed matrix")
    _check_exp_terms(cfg, D.shape[0])
    return float(np.trace(_walk_matrix(D, cfg.c_directed, cfg)) - D.shape[0])


def ancestrality_penalty(D, B, cfg: PenaltyConfig | None = None) -> float:
    """Cycles plus directed walks that land on a bidirected partner."""
    cfg = cfg or DEFAULT_CONFIG
    D = _as_nonneg(D, "directed matrix")
    B = _as_nonneg(B, "bidirected matrix")
    _check_symmetric(B, "bidirected matrix")
    _check_exp_terms(cfg, D.shape[0])
    walks = _walk_matrix(D, cfg.c_directed, cfg)
    return float(np.trace(walks) - D.shape[0] + np.sum(walks * B))


def bow_penalty(D, B, cfg: PenaltyConfig | None = None) -> float:
    """Cycles plus a direct count of bows."""
    cfg = cfg or DEFAULT_CONFIG
    D = _as_nonneg(D, "directed matrix")
    B = _as_nonneg(B, "bidirected matrix")
    _check_symmetric(B, "bidirected matrix")
    _check_exp_terms(cfg, D.shape[0])
    return acyclicity_penalty(D, cfg) + float(np.sum(D * B))


def greenery(D, B, cfg: PenaltyConfig | None = None) -> float:
    """Smooth c-tree detector; zero iff every vertex is reachable.

    On acyclic supports the value is non-negative and exactly zero for
    arid supports: a fixable vertex has an exactly-zero row sum, so its
    tanh mask is exactly zero and its edges vanish without rounding.
    """
    cfg = cfg or DEFAULT_CONFIG
    D = _as_nonneg(D, "directed matrix")
    B = _as_nonneg(B, "bidirected matrix")
    _check_symmetric(B, "bidirected matrix")
    _check_exp_terms(cfg, D.shape[0])
    value, _, _ = _greenery_vg(D, B, cfg, need_grad=False)
    return value


def arid_penalty(D, B, cfg: PenaltyConfig | None = None) -> float:
    cfg = cfg or DEFAULT_CONFIG
    return acyclicity_penalty(D, cfg) + greenery(D, B, cfg)


def soft_fixability(D, B, root: int, cfg: PenaltyConfig | None = None) -> np.ndarray:
    """First-round soft primal-fixability mask for one root.

    Entry k is tanh(scale * row-sum_k(walks(B) o D)) with the root entry
    shifted by one inside the tanh so the root itself is never deleted.
    """
    cfg = cfg or DEFAULT_CONFIG
    D = _as_nonneg(D, "directed matrix")
    B = _as_nonneg(B, "bidirected matrix")
    _check_exp_terms(cfg, D.shape[0])
    t = (_walk_matrix(B, cfg.c_bidirected, cfg) * D).sum(axis=1)
    t[root] += 1.0
    return np.tanh(cfg.tanh_scale * t)


def _greenery_vg(
    D: np.ndarray, B: np.ndarray, cfg: PenaltyConfig, need_grad: bool
) -> tuple[float, np.ndarray | None, np.ndarray | None]:
    d = D.shape[0]
    rounds = d - 1
    scale = cfg.tanh_scale
    total = 0.0
    gD_total = np.zeros((d, d)) if need_grad else None
    gB_total = np.zeros((d, d)) if need_grad else None
    for root in range(d):
        Df, Bf = D, B
        steps = []
        for _ in range(rounds):
            M = _walk_matrix(Bf, cfg.c_bidirected, cfg)
            t = (M * Df).sum(axis=1)
            t[root] += 1.0
            f = np.tanh(scale * t)
            if need_grad:
                steps.append((Df, Bf, M, f))
            Df = Df * f[None, :]
            Bf = Bf * (f[None, :] * f[:, None])
        walks_d = _walk_matrix(Df, cfg.c_directed, cfg)
        walks_b = _walk_matrix(Bf, cfg.c_bidirected, cfg)
        total += float(walks_d[:, root] @ walks_b[:, root])
        if not need_grad:
            continue
        U = np.zeros((d, d))
        U[:, root] = 1.0
        gD = _walk_matrix_vjp(Df, cfg.c_directed, walks_b * U, cfg)
        gB = _walk_matrix_vjp(Bf, cfg.c_bidirected, walks_d * U, cfg)
        for Dprev, Bprev, M, f in reversed(steps):
            gf = (gD * Dprev).sum(axis=0)
            gf += (gB * Bprev * f[:, None]).sum(axis=0)
            gf += (gB * Bprev * f[None, :]).sum(axis=1)
            gD = gD * f[None, :]
            gB = gB * (f[None, :] * f[:, None])
            gt = scale * gf * (1.0 - f * f)
            gD += gt[:, None] * M
            gB += _walk_matrix_vjp(Bprev, cfg.c_bidirected, gt[:, None] * Dprev, cfg)
        gD_total += gD
        gB_total += gB
    return total - d, gD_total, gB_total


def _penalty_vg(
    D: np.ndarray,
    B: np.ndarray,
    graph_class: GraphClass,
    cfg: PenaltyConfig,
    need_grad: bool,
) -> tuple[float, np.ndarray | None, np.ndarray | None]:
    """Value and raw entrywise gradients of the class penalty on (D, B)."""
    d = D.shape[0]
    _check_exp_terms(cfg, d)
    if graph_class is GraphClass.BOW_FREE:
        walks = _walk_matrix(D, cfg.c_directed, cfg)
        value = float(np.trace(walks) - d + np.sum(D * B))
        if not need_grad:
            return value, None, None
        gD = _walk_matrix_vjp(D, cfg.c_directed, np.eye(d), cfg) + B
        return value, gD, D.copy()
    if graph_class is GraphClass.ANCESTRAL:
        walks = _walk_matrix(D, cfg.c_directed, cfg)
        value = float(np.trace(walks) - d + np.sum(walks * B))
        if not need_grad:
            return value, None, None
        gD = _walk_matrix_vjp(D, cfg.c_directed, np.eye(d) + B, cfg)
        return value, gD, walks
    if graph_class is GraphClass.ARID:
        g_value, gD_green, gB_green = _greenery_vg(D, B, cfg, need_grad)
        walks = _walk_matrix(D, cfg.c_directed, cfg)
        value = float(np.trace(walks) - d) + g_value
        if not need_grad:
            return value, None, None
        gD = _walk_matrix_vjp(D, cfg.c_directed, np.eye(d), cfg) + gD_green
        return value, gD, gB_green
    raise ValueError(f"unknown graph class {graph_class!r}")


def class_penalty_value_and_gradient(
    delta: np.ndarray,
    beta: np.ndarray,
    graph_class: GraphClass,
    cfg: PenaltyConfig | None = None,
    need_grad: bool = True,
) -> tuple[float, np.ndarray | None, np.ndarray | None]:
    """Class penalty of SEM coefficient matrices with chain-rule gradients.

    The directed argument is delta o delta and the bidirected one is the
    squared off-diagonal of beta, so the penalty is smooth in the raw
    parameters and flat at exact zeros. The beta gradient is returned in
    the tied convention: entry (i, j) is the derivative with respect to
    the single parameter shared by beta[i, j] and beta[j, i].
    """
    cfg = cfg or DEFAULT_CONFIG
    delta = np.asarray(delta, dtype=float)
    beta = np.asarray(beta, dtype=float)
    D = delta * delta
    off = beta.copy()
    np.fill_diagonal(off, 0.0)
    B = off * off
    value, gD, gB = _penalty_vg(D, B, graph_class, cfg, need_grad)
    if not need_grad:
        return value, None, None
    gdelta = 2.0 * delta * gD
    graw = 2.0 * off * gB
    gbeta = graw + graw.T
    np.fill_diagonal(gbeta, 0.0)
    return value, gdelta, gbeta


def class_penalty(
    params: SemParams, graph_class: GraphClass, cfg: PenaltyConfig | None = None
) -> float:
    value, _, _ = class_penalty_value_and_gradient(
        params.delta, params.beta, graph_class, cfg, need_grad=False
    )
    return value


def class_penalty_gradient(
    params: SemParams, graph_class: GraphClass, cfg: PenaltyConfig | None = None
) -> tuple[np.ndarray, np.ndarray]:
    _, gdelta, gbeta = class_penalty_value_and_gradient(
        params.delta, params.beta, graph_class, cfg, need_grad=True
    )
    return gdelta, gbeta
