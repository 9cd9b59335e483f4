"""Dual-ascent driver that wraps the regularized fitter.

Each dual iteration solves the penalized primal problem under the current
penalty weight rho and multiplier alpha, escalating rho by a fixed factor
whenever the constraint value fails to shrink by the progress rate, then
updates alpha <- alpha + rho h. The fitter's iteration budget starts at
one and grows by a fixed increment, since early iterations work far from
the constraint set and polishing them would be wasted effort. Restarts
differ only in their initialization; the converged restart with the best
smooth score wins.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .graphs import Admg, GraphClass
from .penalties import PenaltyConfig, class_penalty
from .ricf import OptimizationError, random_init, regularized_ricf
from .scores import ScoreConfig, abic, bic
from .sem import Dataset, SemParams, gaussian_neg2_loglik


class DiscoveryError(RuntimeError):
    """Every restart diverged; ``runs`` holds the per-restart wreckage."""

    def __init__(self, message: str, runs=None):
        super().__init__(message)
        self.runs = runs or []


def _safe_nll(data: Dataset, params: SemParams) -> float:
    # indefinite error covariance means the Gaussian model is invalid there
    try:
        return gaussian_neg2_loglik(data, params)
    except np.linalg.LinAlgError:
        return np.inf


def _safe_abic(data: Dataset, params: SemParams, cfg: ScoreConfig) -> float:
    try:
        return abic(data, params, cfg)
    except np.linalg.LinAlgError:
        return np.inf


def _safe_bic(data: Dataset, params: SemParams, cfg: ScoreConfig) -> float:
    try:
        return bic(data, params, cfg)
    except np.linalg.LinAlgError:
        return np.inf


@dataclass(frozen=True)
class Hyperparams:
    """Tuning constants of the discovery procedure.

    Defaults follow the reference settings: constraint tolerance 1e-8,
    fitter tolerance 1e-4, regularization 0.05, edge threshold 0.05,
    progress rate 0.25, penalty weight escalating by 10 up to 1e16, and
    five restarts.
    """

    lam: float = 0.05
    omega: float = 0.05
    h_tol: float = 1e-8
    ricf_tol: float = 1e-4
    max_dual_iterations: int = 100
    ricf_increment: int = 1
    progress_rate: float = 0.25
    rho_init: float = 1.0
    rho_factor: float = 10.0
    rho_max: float = 1e16
    restarts: int = 5
    graph_class: GraphClass = GraphClass.BOW_FREE
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    seed: int = 0
    ricf_budget_cap: int = 500
    ricf_inner_maxiter: int = 200

    def __post_init__(self):
        if not 0 < self.progress_rate < 1:
            raise ValueError("progress_rate must lie strictly between 0 and 1")
        if not 0 < self.rho_init <= self.rho_max:
            raise ValueError("need 0 < rho_init <= rho_max")
        if min(self.h_tol, self.ricf_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.lam < 0 or self.omega < 0:
            raise ValueError("lam and omega must be non-negative")
        if self.restarts < 1:
            raise ValueError("need at least one restart")


@dataclass(frozen=True)
class DualStep:
    iteration: int
    rho: float
    alpha: float
    h: float
    neg2loglik: float
    abic: float
    ricf_iters: int
    objective: float
    step_norm: float


@dataclass
class RestartRun:
    index: int
    converged: bool
    diverged: bool
    h: float
    abic: Optional[float]
    params: Optional[SemParams]
    trace: list[DualStep]


@dataclass
class DiscoveryResult:
    params: SemParams
    graph: Admg
    trace: list[DualStep]
    converged: bool
    score: float
    restarts: list[RestartRun]


def threshold_to_graph(
    params: SemParams, omega: float, names=None
) -> Admg:
    """Keep edges whose coefficient magnitude strictly exceeds the threshold."""
    if omega < 0:
        raise ValueError("omega must be non-negative")
    D = (np.abs(params.delta) > omega).astype(np.int8)
    np.fill_diagonal(D, 0)
    B = (np.abs(params.beta) > omega).astype(np.int8)
    np.fill_diagonal(B, 0)
    return Admg(D, B, names)


def _dual_ascent(
    data: Dataset, hp: Hyperparams, init: Optional[SemParams], score_cfg: ScoreConfig
) -> tuple[Optional[SemParams], list[DualStep], bool, bool]:
    """One full run from one initialization.

    Returns (params, trace, converged, diverged). The first iteration
    always runs: the progress test compares against infinity the first
    time around, since the trivial zero-coefficient start has a vacuously
    zero constraint value.
    """
    rho = hp.rho_init
    alpha = 1.0
    budget = 1
    h_prev = np.inf
    params = init
    trace: list[DualStep] = []
    converged = False
    for t in range(1, hp.max_dual_iterations + 1):
        while True:
            try:
                fit = regularized_ricf(
                    data,
                    graph_class=hp.graph_class,
                    penalty_cfg=hp.penalty,
                    rho=rho,
                    alpha=alpha,
                    lam=hp.lam,
                    tol=hp.ricf_tol,
                    max_iterations=budget,
                    init=params,
                    inner_maxiter=hp.ricf_inner_maxiter,
                )
            except OptimizationError:
                return params, trace, False, True
            h_new = class_penalty(fit.params, hp.graph_class, hp.penalty)
            progressed = h_new < hp.progress_rate * h_prev
            if progressed or rho >= hp.rho_max:
                break
            rho = min(rho * hp.rho_factor, hp.rho_max)
        alpha_used = alpha
        alpha = alpha + rho * h_new
        budget = min(budget + hp.ricf_increment, hp.ricf_budget_cap)
        params = fit.params
        trace.append(
            DualStep(
                iteration=t,
                rho=rho,
                alpha=alpha_used,
                h=h_new,
                neg2loglik=_safe_nll(data, params),
                abic=_safe_abic(data, params, score_cfg),
                ricf_iters=fit.iterations,
                objective=fit.objectives[-1] if fit.objectives else np.nan,
                step_norm=fit.step_norm,
            )
        )
        h_prev = h_new
        if h_new <= hp.h_tol:
            converged = True
            break
        if not progressed and rho >= hp.rho_max:
            break  # the penalty weight is capped and no longer helps
    return params, trace, converged, False


def discover(data: Dataset, hp: Optional[Hyperparams] = None) -> DiscoveryResult:
    """Fit the data under the class constraint and threshold to a graph.

    Runs ``hp.restarts`` independent initializations (the first from the
    zero-coefficient default, the rest random), keeps every run's trace,
    and selects the converged run with the smallest smooth score, falling
    back to the smallest constraint value when nothing converged.
    """
    hp = hp or Hyperparams()
    if data.n < data.d + 1:
        warnings.warn(
            f"only {data.n} samples for {data.d} variables; "
            "estimates will be unstable",
            RuntimeWarning,
        )
    score_cfg = ScoreConfig(lam=hp.lam, zero_tol=hp.omega)
    seeds = np.random.SeedSequence(hp.seed).spawn(hp.restarts)
    runs: list[RestartRun] = []
    for k in range(hp.restarts):
        if k == 0:
            init = None
        else:
            init = random_init(data, np.random.default_rng(seeds[k]))
        params, trace, converged, diverged = _dual_ascent(data, hp, init, score_cfg)
        if diverged or params is None:
            runs.append(
                RestartRun(k, False, True, np.inf, None, params, trace)
            )
            continue
        h_final = trace[-1].h if trace else class_penalty(
            params, hp.graph_class, hp.penalty
        )
        runs.append(
            RestartRun(
                k,
                converged,
                False,
                h_final,
                _safe_abic(data, params, score_cfg),
                params,
                trace,
            )
        )
    best = None
    for run in runs:
        if not run.converged:
            continue
        if best is None or run.abic < best.abic:
            best = run
    if best is None:
        for run in runs:
            if run.diverged:
                continue
            if best is None or run.h < best.h:
                best = run
    if best is None:
        raise DiscoveryError("all restarts diverged", runs=runs)
    graph = threshold_to_graph(best.params, hp.omega, data.names)
    return DiscoveryResult(
        params=best.params,
        graph=graph,
        trace=best.trace,
        converged=best.converged,
        score=_safe_bic(data, best.params, score_cfg),
        restarts=runs,
    )
