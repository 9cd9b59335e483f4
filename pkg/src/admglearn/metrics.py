"""Recovery metrics: skeleton and endpoint-mark agreement between graphs.

Skeleton metrics compare unordered adjacencies directly. Endpoint metrics
first project both graphs onto their maximal ancestral versions, then
compare the mark (arrowhead or tail) each edge places at each endpoint;
marks on pairs that are non-adjacent in the other graph count as misses
or false discoveries, respectively.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

from .graphs import Admg, mag_projection


@dataclass(frozen=True)
class MetricsReport:
    skeleton_tpr: Optional[float]
    skeleton_fdr: Optional[float]
    arrowhead_tpr: Optional[float]
    arrowhead_fdr: Optional[float]
    tail_tpr: Optional[float]
    tail_fdr: Optional[float]
    skeleton_correct: int
    skeleton_true: int
    skeleton_pred: int
    arrowhead_correct: int
    arrowhead_true: int
    arrowhead_pred: int
    tail_correct: int
    tail_true: int
    tail_pred: int

    def to_dict(self) -> dict:
        return asdict(self)


def _rate(numerator: int, denominator: int) -> Optional[float]:
    if denominator == 0:
        return None
    return numerator / denominator


def _check_same_vertices(pred: Admg, truth: Admg) -> None:
    if pred.names != truth.names:
        raise ValueError(
            f"vertex sets differ: {list(pred.names)} vs {list(truth.names)}"
        )


def skeleton_metrics(
    pred: Admg, truth: Admg
) -> tuple[Optional[float], Optional[float]]:
    """True positive and false discovery rates over unordered adjacencies."""
    _check_same_vertices(pred, truth)
    p = pred.adjacency_pairs()
    t = truth.adjacency_pairs()
    correct = len(p & t)
    return _rate(correct, len(t)), _rate(len(p) - correct, len(p))


def _marks(g: Admg) -> tuple[set, set]:
    """(arrowheads, tails) as ((i, j), endpoint) with i < j."""
    arrows, tails = set(), set()
    D = g.directed
    B = g.bidirected
    for i, j in g.adjacency_pairs():
        for a, b in ((i, j), (j, i)):
            if D[a, b]:
                arrows.add(((i, j), b))
                tails.add(((i, j), a))
        if B[i, j]:
            arrows.add(((i, j), i))
            arrows.add(((i, j), j))
    return arrows, tails


def endpoint_metrics(
    pred: Admg, truth: Admg
) -> tuple[
    tuple[Optional[float], Optional[float]], tuple[Optional[float], Optional[float]]
]:
    """((arrowhead tpr, fdr), (tail tpr, fdr)) after ancestral projection."""
    report = compare_graphs(pred, truth)
    return (
        (report.arrowhead_tpr, report.arrowhead_fdr),
        (report.tail_tpr, report.tail_fdr),
    )


def compare_graphs(pred: Admg, truth: Admg) -> MetricsReport:
    _check_same_vertices(pred, truth)
    p_adj = pred.adjacency_pairs()
    t_adj = truth.adjacency_pairs()
    skel_correct = len(p_adj & t_adj)
    pred_mag = mag_projection(pred)
    truth_mag = mag_projection(truth)
    p_arrows, p_tails = _marks(pred_mag)
    t_arrows, t_tails = _marks(truth_mag)
    arrow_correct = len(p_arrows & t_arrows)
    tail_correct = len(p_tails & t_tails)
    return MetricsReport(
        skeleton_tpr=_rate(skel_correct, len(t_adj)),
        skeleton_fdr=_rate(len(p_adj) - skel_correct, len(p_adj)),
        arrowhead_tpr=_rate(arrow_correct, len(t_arrows)),
        arrowhead_fdr=_rate(len(p_arrows) - arrow_correct, len(p_arrows)),
        tail_tpr=_rate(tail_correct, len(t_tails)),
        tail_fdr=_rate(len(p_tails) - tail_correct, len(p_tails)),
        skeleton_correct=skel_correct,
        skeleton_true=len(t_adj),
        skeleton_pred=len(p_adj),
        arrowhead_correct=arrow_correct,
        arrowhead_true=len(t_arrows),
        arrowhead_pred=len(p_arrows),
        tail_correct=tail_correct,
        tail_true=len(t_tails),
        tail_pred=len(p_tails),
    )
