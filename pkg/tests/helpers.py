"""Shared graph fixtures and brute-force oracles for the test suite.

The oracles here deliberately take the slow, literal route (path
enumeration, subset enumeration) so they stay independent of the
implementations they check.
"""

import itertools

import numpy as np

from admglearn.graphs import Admg

NAMES_ABCD = ["A", "B", "C", "D"]


def fig_confounded_pair() -> Admg:
    """A -> C, B -> D, C <-> D: ancestral, one latent confounder."""
    return Admg.from_edges(
        NAMES_ABCD, directed=[("A", "C"), ("B", "D")], bidirected=[("C", "D")]
    )


def fig_verma() -> Admg:
    """A -> C -> D -> B with A <-> B, A <-> D: arid, not ancestral."""
    return Admg.from_edges(
        NAMES_ABCD,
        directed=[("A", "C"), ("C", "D"), ("D", "B")],
        bidirected=[("A", "B"), ("A", "D")],
    )


def fig_verma_mag() -> Admg:
    """The complete, fully directed ancestral version of fig_verma."""
    return Admg.from_edges(
        NAMES_ABCD,
        directed=[
            ("A", "C"), ("C", "D"), ("D", "B"),
            ("A", "B"), ("A", "D"), ("C", "B"),
        ],
    )


def fig_bowfree_supermodel() -> Admg:
    """fig_verma plus C <-> B: bow-free but not arid."""
    return Admg.from_edges(
        NAMES_ABCD,
        directed=[("A", "C"), ("C", "D"), ("D", "B")],
        bidirected=[("A", "B"), ("A", "D"), ("C", "B")],
    )


def graph_arid_chain() -> Admg:
    """fig_verma relabeled V1..V4 (chain plus two bidirected edges)."""
    return Admg.from_edges(
        ["V1", "V2", "V3", "V4"],
        directed=[("V1", "V2"), ("V2", "V3"), ("V3", "V4")],
        bidirected=[("V1", "V3"), ("V1", "V4")],
    )


def graph_ctree_chain() -> Admg:
    """graph_arid_chain plus V2 <-> V4: contains a V4-rooted c-tree."""
    return Admg.from_edges(
        ["V1", "V2", "V3", "V4"],
        directed=[("V1", "V2"), ("V2", "V3"), ("V3", "V4")],
        bidirected=[("V1", "V3"), ("V1", "V4"), ("V2", "V4")],
    )


def protein_subnetwork() -> Admg:
    """Five-protein subgraph with an inducing path from Akt to PKC."""
    return Admg.from_edges(
        ["Akt", "Erk", "Jnk", "PKC", "PKA"],
        directed=[("Akt", "Erk"), ("Erk", "Jnk"), ("Jnk", "PKC"), ("PKA", "Jnk")],
        bidirected=[("Erk", "PKA"), ("PKA", "PKC")],
    )


# -- enumeration ------------------------------------------------------------

def all_directed_supports(d):
    """Every 0/1 matrix with zero diagonal (cyclic ones included)."""
    positions = [(i, j) for i in range(d) for j in range(d) if i != j]
    for bits in itertools.product((0, 1), repeat=len(positions)):
        D = np.zeros((d, d), dtype=np.int8)
        for (i, j), b in zip(positions, bits):
            D[i, j] = b
        yield D


def all_bidirected_supports(d):
    """Every symmetric 0/1 matrix with zero diagonal."""
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        B = np.zeros((d, d), dtype=np.int8)
        for (i, j), b in zip(pairs, bits):
            B[i, j] = B[j, i] = b
        yield B


def random_support_pair(d, rng, p_dir=0.35, p_bi=0.35):
    """A random (not necessarily acyclic) directed/bidirected support pair."""
    D = (rng.random((d, d)) < p_dir).astype(np.int8)
    np.fill_diagonal(D, 0)
    upper = np.triu((rng.random((d, d)) < p_bi).astype(np.int8), k=1)
    B = upper + upper.T
    return D, B


# -- brute-force oracles ------------------------------------------------------

def _directed_reachable_within(D, start, targets, allowed):
    """DFS through directed edges using only `allowed` vertices."""
    stack = [start]
    seen = {start}
    while stack:
        v = stack.pop()
        if v in targets:
            return True
        for w in np.nonzero(D[v])[0]:
            w = int(w)
            if w in allowed and w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def brute_force_c_tree_exists(g: Admg, root: int) -> bool:
    """Check every vertex subset for the c-tree conditions.

    A subset S containing the root (|S| >= 2) forms a root-directed c-tree
    when every vertex of S reaches the root through directed edges inside
    S and the bidirected edges inside S connect all of S.
    """
    d = g.d
    D = g.directed
    B = g.bidirected
    others = [v for v in range(d) if v != root]
    for r in range(1, len(others) + 1):
        for extra in itertools.combinations(others, r):
            S = set(extra) | {root}
            ok = all(
                _directed_reachable_within(D, v, {root}, S) for v in extra
            )
            if not ok:
                continue
            # connectivity of the induced bidirected subgraph on S
            seen = {next(iter(S))}
            stack = list(seen)
            while stack:
                v = stack.pop()
                for w in np.nonzero(B[v])[0]:
                    w = int(w)
                    if w in S and w not in seen:
                        seen.add(w)
                        stack.append(w)
            if seen == S:
                return True
    return False


def brute_force_inducing_path(g: Admg, i: int, j: int) -> bool:
    """Enumerate simple interior sequences and test the definition literally.

    A sequence (i, v1, ..., vk, j) carries an inducing path when some
    edge-type assignment makes every vm a collider and every vm has a
    directed path to i or j. Colliders need arrowheads on both sides, so
    the first edge must be i -> v1 or i <-> v1, interior edges must be
    bidirected, and the last edge must be j -> vk or j <-> vk.
    """
    d = g.d
    D = g.directed
    B = g.bidirected
    if D[i, j] or D[j, i] or B[i, j]:
        return True

    everything = set(range(d))

    def collider_ok(v):
        # a usable interior vertex needs a directed path to an endpoint
        return _directed_reachable_within(D, v, {i, j}, everything)

    def search(sequence):
        tail = sequence[-1]
        if (D[j, tail] or B[j, tail]):
            return True
        for nxt in range(d):
            if nxt in sequence or nxt in (i, j):
                continue
            if not B[tail, nxt]:
                continue
            if not collider_ok(nxt):
                continue
            if search(sequence + [nxt]):
                return True
        return False

    for v1 in range(d):
        if v1 in (i, j):
            continue
        if not (D[i, v1] or B[i, v1]):
            continue
        if not collider_ok(v1):
            continue
        if search([v1]):
            return True
    return False
