"""Edge strengths and the decomposition into weak edges and strong components."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graphcore import Graph, connected_components, norm_pair, stoer_wagner

MAX_BRUTEFORCE_N = 12


def edge_strength_bruteforce(g: Graph, e: tuple[int, int]) -> int:
    """Max over vertex sets ``S`` containing ``e`` of ``mincut(G[S])``.

    Enumerates every superset of the edge's endpoints, so only for small n.
    """
    e = norm_pair(*e)
    if e not in g.edges:
        raise ValueError(f"{e} is not an edge of the graph")
    if g.n > MAX_BRUTEFORCE_N:
        raise ValueError(f"n={g.n} too large for brute-force strength")
    adj = g.adjacency()
    others = [v for v in range(g.n) if v not in e]
    best = 0
    for r in range(len(others) + 1):
        for extra in combinations(others, r):
            s = list(e) + list(extra)
            sub = adj[np.ix_(s, s)]
            if not _connected_dense(sub):
                continue
            value, _ = stoer_wagner(sub)
            best = max(best, int(round(value)))
    return best


def _connected_dense(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = [0]
    while frontier:
        nxt = np.flatnonzero((adj[frontier].sum(axis=0) > 0) & ~seen)
        seen[nxt] = True
        frontier = list(nxt)
    return bool(seen.all())


def edge_strengths(g: Graph) -> dict[tuple[int, int], float]:
    """Exact strengths by recursive minimum-cut peeling.

    Each vertex set met in the recursion induces ``G[C]``; an edge's strength
    is the largest minimum cut among the nested sets that contain it.
    """
    adj = g.adjacency()
    strength = {e: 0.0 for e in g.edges}
    stack = [c for c in connected_components(g) if len(c) > 1]
    while stack:
        comp = stack.pop()
        sub = adj[np.ix_(comp, comp)]
        value, side_local = stoer_wagner(sub)
        inner = [(comp[i], comp[j]) for i, j in zip(*np.nonzero(np.triu(sub)))]
        for e in inner:
            if value > strength[e]:
                strength[e] = value
        side = {comp[i] for i in side_local}
        for part in (sorted(side), sorted(set(comp) - side)):
            if len(part) < 2:
                continue
            # a side of a minimum cut may itself be disconnected
            part_graph = adj[np.ix_(part, part)]
            for sub_comp in _dense_components(part_graph):
                if len(sub_comp) > 1:
                    stack.append([part[i] for i in sub_comp])
    return strength


def _dense_components(adj: np.ndarray) -> list[list[int]]:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = True
        comp = [s]
        frontier = [s]
        while frontier:
            nxt = np.flatnonzero((adj[frontier].sum(axis=0) > 0) & ~seen)
            seen[nxt] = True
            frontier = list(nxt)
            comp.extend(int(x) for x in nxt)
        comps.append(sorted(comp))
    return comps


@dataclass(frozen=True)
class StrengthDecomposition:
    lam: float
    weak_edges: frozenset
    components: tuple

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "T": [list(e) for e in sorted(self.weak_edges)],
            "components": [list(c) for c in self.components],
        }


def decomposition_from_weak_edges(g: Graph, lam: float, weak: frozenset) -> StrengthDecomposition:
    rest = g.minus(weak)
    comps = tuple(tuple(c) for c in connected_components(rest))
    return StrengthDecomposition(float(lam), frozenset(weak), comps)


def weak_edge_decomposition(g: Graph, lam: float) -> StrengthDecomposition:
    """Weak edges ``T = {e : strength(e) <= lam}`` and the components of ``G - T``."""
    if lam < 1:
        raise ValueError("lambda must be at least 1")
    strengths = edge_strengths(g)
    weak = frozenset(e for e, s in strengths.items() if s <= lam)
    return decomposition_from_weak_edges(g, lam, weak)
