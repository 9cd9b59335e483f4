"""Data model and discrete algorithms for directed mixed graphs.

A directed mixed graph on ``d`` named vertices carries two adjacency
matrices: ``directed[i, j] = 1`` encodes the edge i -> j and
``bidirected[i, j] = 1`` encodes i <-> j. An optional boolean mask marks
"fixed" (context) vertices, which may have no incoming directed edges and
no bidirected edges; a graph with a non-trivial mask is a conditional
graph produced by :func:`primal_fix`.

Acyclicity is a *checked* property, not a construction invariant, so the
same type can hold arbitrary binary supports (the penalty test-benches
enumerate cyclic ones on purpose).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np


class GraphError(ValueError):
    """Malformed graph, or a graph operation applied outside its domain."""


class GenerationError(RuntimeError):
    """Rejection sampling exhausted its draw budget."""


class GraphClass(Enum):
    """Target classes for discovery, ordered by inclusion.

    Every ancestral graph is arid and every arid graph is bow-free.
    """

    ANCESTRAL = "ancestral"
    ARID = "arid"
    BOW_FREE = "bowfree"

    @classmethod
    def parse(cls, text: str) -> "GraphClass":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(
            f"unknown graph class {text!r}; expected one of "
            f"{[m.value for m in cls]}"
        )


class Admg:
    """Immutable directed mixed graph (adjacency matrices are read-only)."""

    __slots__ = ("names", "directed", "bidirected", "fixed")

    def __init__(self, directed, bidirected, names=None, fixed=None):
        D_raw = np.asarray(directed)
        B_raw = np.asarray(bidirected)
        if D_raw.ndim != 2 or D_raw.shape[0] != D_raw.shape[1]:
            raise GraphError("directed adjacency must be a square matrix")
        if B_raw.shape != D_raw.shape:
            raise GraphError("bidirected adjacency must match the directed shape")
        if not np.isin(D_raw, (0, 1, False, True)).all():
            raise GraphError("directed adjacency entries must be 0 or 1")
        if not np.isin(B_raw, (0, 1, False, True)).all():
            raise GraphError("bidirected adjacency entries must be 0 or 1")
        D = D_raw.astype(np.int8)
        B = B_raw.astype(np.int8)
        d = D.shape[0]
        if d < 1:
            raise GraphError("a graph needs at least one vertex")
        if np.any(np.diag(D)):
            raise GraphError("self loops are not allowed")
        if np.any(B != B.T):
            raise GraphError("bidirected adjacency must be symmetric")
        if np.any(np.diag(B)):
            raise GraphError("bidirected adjacency must have a zero diagonal")
        if names is None:
            names = [f"V{i + 1}" for i in range(d)]
        names = [str(nm) for nm in names]
        if len(names) != d:
            raise GraphError(f"expected {d} vertex names, got {len(names)}")
        if len(set(names)) != d:
            raise GraphError("vertex names must be unique")
        if fixed is None:
            mask = np.zeros(d, dtype=bool)
        else:
            mask = np.asarray(fixed, dtype=bool)
            if mask.shape != (d,):
                raise GraphError("fixed mask must have one entry per vertex")
        if mask.any():
            if np.any(D[:, mask]):
                raise GraphError("fixed vertices cannot have incoming directed edges")
            if np.any(B[mask, :]):
                raise GraphError("fixed vertices cannot have bidirected edges")
        for arr in (D, B, mask):
            arr.setflags(write=False)
        self.names = tuple(names)
        self.directed = D
        self.bidirected = B
        self.fixed = mask

    @classmethod
    def from_edges(
        cls,
        names: Sequence[str],
        directed: Iterable[tuple[str, str]] = (),
        bidirected: Iterable[tuple[str, str]] = (),
    ) -> "Admg":
        names = list(names)
        index = {nm: k for k, nm in enumerate(names)}
        if len(index) != len(names):
            raise GraphError("vertex names must be unique")
        d = len(names)
        D = np.zeros((d, d), dtype=np.int8)
        B = np.zeros((d, d), dtype=np.int8)
        for a, b in directed:
            if a not in index or b not in index:
                raise GraphError(f"directed edge ({a}, {b}) uses an unknown vertex")
            D[index[a], index[b]] = 1
        for a, b in bidirected:
            if a not in index or b not in index:
                raise GraphError(f"bidirected edge ({a}, {b}) uses an unknown vertex")
            B[index[a], index[b]] = 1
            B[index[b], index[a]] = 1
        return cls(D, B, names)

    @property
    def d(self) -> int:
        return self.directed.shape[0]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise GraphError(f"unknown vertex {name!r}") from None

    def children(self, v: int) -> np.ndarray:
        return np.nonzero(self.directed[v])[0]

    def directed_edges(self) -> list[tuple[str, str]]:
        return [
            (self.names[i], self.names[j]) for i, j in np.argwhere(self.directed)
        ]

    def bidirected_edges(self) -> list[tuple[str, str]]:
        return [
            (self.names[i], self.names[j])
            for i, j in np.argwhere(np.triu(self.bidirected))
        ]

    def adjacency_pairs(self) -> set[tuple[int, int]]:
        """Unordered index pairs joined by any edge."""
        both = (self.directed | self.directed.T | self.bidirected) != 0
        return {(i, j) for i, j in np.argwhere(np.triu(both, k=1))}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Admg):
            return NotImplemented
        return (
            self.names == other.names
            and np.array_equal(self.directed, other.directed)
            and np.array_equal(self.bidirected, other.bidirected)
            and np.array_equal(self.fixed, other.fixed)
        )

    def __hash__(self):
        return hash(
            (
                self.names,
                self.directed.tobytes(),
                self.bidirected.tobytes(),
                self.fixed.tobytes(),
            )
        )

    def __repr__(self) -> str:
        ne_d = int(self.directed.sum())
        ne_b = int(np.triu(self.bidirected).sum())
        return f"Admg(d={self.d}, directed={ne_d}, bidirected={ne_b})"


@dataclass(frozen=True)
class GraphProperties:
    acyclic: bool
    ancestral: bool
    arid: bool
    bow_free: bool

    def passes(self, graph_class: GraphClass) -> bool:
        return {
            GraphClass.ANCESTRAL: self.ancestral,
            GraphClass.ARID: self.arid,
            GraphClass.BOW_FREE: self.bow_free,
        }[graph_class]


@dataclass(frozen=True)
class ReachResult:
    reachable: bool
    c_tree_vertices: Optional[frozenset[int]]


def is_acyclic(D) -> bool:
    """Kahn's algorithm on the support of ``D``."""
    A = np.asarray(D) != 0
    d = A.shape[0]
    indegree = A.sum(axis=0).astype(int)
    stack = [v for v in range(d) if indegree[v] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for w in np.nonzero(A[v])[0]:
            indegree[w] -= 1
            if indegree[w] == 0:
                stack.append(w)
    return seen == d


def ancestor_matrix(D) -> np.ndarray:
    """Boolean matrix with [i, j] true iff a directed path i -> ... -> j exists.

    Paths have length >= 1, so the diagonal is false on acyclic supports.
    """
    A = (np.asarray(D) != 0).astype(np.int64)
    R = A.copy()
    while True:
        R_next = R + R @ R
        R_next = (R_next > 0).astype(np.int64)
        if np.array_equal(R_next, R):
            return R.astype(bool)
        R = R_next


def _bidirected_component(B, v: int) -> np.ndarray:
    """Vertices connected to v through bidirected edges (v included)."""
    A = np.asarray(B) != 0
    seen = np.zeros(A.shape[0], dtype=bool)
    seen[v] = True
    frontier = seen.copy()
    while frontier.any():
        nxt = A[frontier].any(axis=0) & ~seen
        seen |= nxt
        frontier = nxt
    return seen


def check_properties(g: Admg) -> GraphProperties:
    """Classify a plain graph: acyclic, ancestral, arid, bow-free.

    The three class flags each include acyclicity, which keeps the
    inclusion chain ancestral => arid => bow-free intact on any input.
    """
    if g.fixed.any():
        raise GraphError("property checks expect a plain graph without fixed vertices")
    D, B = g.directed, g.bidirected
    acyclic = is_acyclic(D)
    bow_free = acyclic and not np.any((D != 0) & (B != 0))
    ancestral = acyclic and not np.any(ancestor_matrix(D) & (B != 0))
    arid = acyclic and all(
        _reachable_raw(D, B, v)[0] for v in range(g.d)
    )
    return GraphProperties(acyclic, ancestral, arid, bow_free)


def primal_fixable(g: Admg, v: int) -> bool:
    """A vertex is primal fixable when no bidirected path reaches a child.

    Fixed vertices carry no bidirected edges, so the component search
    automatically ignores them.
    """
    if not 0 <= v < g.d:
        raise GraphError(f"vertex index {v} out of range")
    if g.fixed[v]:
        raise GraphError(f"vertex {g.names[v]} is already fixed")
    component = _bidirected_component(g.bidirected, v)
    return not component[g.children(v)].any()


def primal_fix(g: Admg, v: int) -> Admg:
    """Fix ``v``: drop its incoming directed edges and all bidirected edges."""
    if not primal_fixable(g, v):
        raise GraphError(f"vertex {g.names[v]} is not primal fixable")
    D = g.directed.copy()
    B = g.bidirected.copy()
    fixed = g.fixed.copy()
    D[:, v] = 0
    B[v, :] = 0
    B[:, v] = 0
    fixed[v] = True
    return Admg(D, B, g.names, fixed)


def _reachable_raw(D, B, v: int) -> tuple[bool, frozenset[int]]:
    """Greedy primal fixing of everything except v on raw matrices."""
    D = np.array(D, dtype=np.int8)
    B = np.array(B, dtype=np.int8)
    remaining = set(range(D.shape[0]))
    remaining.discard(v)
    progress = True
    while progress and remaining:
        progress = False
        for u in sorted(remaining):
            component = _bidirected_component(B, u)
            if not component[np.nonzero(D[u])[0]].any():
                D[:, u] = 0
                B[u, :] = 0
                B[:, u] = 0
                remaining.discard(u)
                progress = True
    return (not remaining, frozenset(remaining | {v}))


def reachable(g: Admg, v: int) -> ReachResult:
    """Try to primal-fix all other vertices; report the stuck set on failure.

    The stuck set together with v is the vertex set of a v-rooted c-tree,
    and it does not depend on the fixing order because the fixable set at
    every stage is order-independent.
    """
    if g.fixed.any():
        raise GraphError("reachability expects a plain graph")
    if not 0 <= v < g.d:
        raise GraphError(f"vertex index {v} out of range")
    ok, stuck = _reachable_raw(g.directed, g.bidirected, v)
    if ok:
        return ReachResult(True, None)
    return ReachResult(False, stuck)


def inducing_path_exists(g: Admg, i: int, j: int) -> bool:
    """Test for a path whose interior is all colliders ancestral to an endpoint.

    Interior vertices need arrowheads on both sides, so the interior of any
    such path is a chain of bidirected edges; the first and last edges only
    need an arrowhead at the interior end. With that observation the test
    reduces to a component search in the bidirected subgraph over vertices
    that have a directed path to i or j. A shared edge counts as a
    length-one path.
    """
    if i == j:
        raise GraphError("inducing path endpoints must differ")
    for v in (i, j):
        if not 0 <= v < g.d:
            raise GraphError(f"vertex index {v} out of range")
        if g.fixed[v]:
            raise GraphError(f"endpoint {g.names[v]} is a fixed vertex")
    D = g.directed != 0
    B = g.bidirected != 0
    if D[i, j] or D[j, i] or B[i, j]:
        return True
    anc = ancestor_matrix(g.directed)
    eligible = anc[:, i] | anc[:, j]
    eligible[i] = eligible[j] = False
    start = (D[i] | B[i]) & eligible
    goal = (D[j] | B[j]) & eligible
    if not start.any() or not goal.any():
        return False
    seen = start.copy()
    frontier = start.copy()
    while frontier.any():
        if (seen & goal).any():
            return True
        nxt = B[frontier].any(axis=0) & eligible & ~seen
        seen |= nxt
        frontier = nxt
    return bool((seen & goal).any())


def mag_projection(g: Admg) -> Admg:
    """Project onto a maximal ancestral graph over the same vertices.

    Pairs become adjacent exactly when an inducing path joins them; the
    edge points i -> j when i is an ancestor of j and is bidirected when
    neither is an ancestor of the other.
    """
    if g.fixed.any():
        raise GraphError("projection expects a plain graph")
    if not is_acyclic(g.directed):
        raise GraphError("projection requires an acyclic graph")
    d = g.d
    anc = ancestor_matrix(g.directed)
    D = np.zeros((d, d), dtype=np.int8)
    B = np.zeros((d, d), dtype=np.int8)
    for i in range(d):
        for j in range(i + 1, d):
            if not inducing_path_exists(g, i, j):
                continue
            if anc[i, j]:
                D[i, j] = 1
            elif anc[j, i]:
                D[j, i] = 1
            else:
                B[i, j] = B[j, i] = 1
    return Admg(D, B, g.names)


def random_admg(
    d: int,
    p_dir: float,
    p_bi: float,
    graph_class: GraphClass,
    rng: np.random.Generator,
    max_draws: int = 10000,
) -> Admg:
    """Sample a random graph of the requested class.

    Directed edges go forward along a random topological order, bidirected
    edges are dropped wherever they would form a bow, which already yields
    a bow-free graph; the stricter classes are obtained by rejection.
    """
    if not (0.0 <= p_dir <= 1.0 and 0.0 <= p_bi <= 1.0):
        raise ValueError("edge probabilities must lie in [0, 1]")
    iu = np.triu_indices(d, k=1)
    for _ in range(max_draws):
        order = rng.permutation(d)
        D = np.zeros((d, d), dtype=np.int8)
        keep = rng.random(len(iu[0])) < p_dir
        D[order[iu[0][keep]], order[iu[1][keep]]] = 1
        B = np.zeros((d, d), dtype=np.int8)
        keep = rng.random(len(iu[0])) < p_bi
        B[iu[0][keep], iu[1][keep]] = 1
        B |= B.T
        B *= 1 - (D | D.T)  # a bow keeps its directed edge and loses the bidirected one
        g = Admg(D, B)
        if check_properties(g).passes(graph_class):
            return g
    raise GenerationError(
        f"no {graph_class.value} graph found in {max_draws} draws; "
        "lower the edge densities"
    )
