"""Graph value types, cuts, Laplacians and the correlation clustering objective.

Vertices are always the integers ``0..n-1``.  Edges are stored as unordered
pairs normalised to ``(u, v)`` with ``u < v``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

import numpy as np


def norm_pair(u: int, v: int) -> tuple[int, int]:
    if u == v:
        raise ValueError(f"self-loop ({u}, {u}) is not allowed")
    return (u, v) if u < v else (v, u)


def pair_index(u: int, v: int, n: int) -> int:
    """Position of the pair {u, v} in the lexicographic order of C(n, 2)."""
    u, v = norm_pair(u, v)
    return u * (2 * n - u - 1) // 2 + (v - u - 1)


def all_pairs(n: int) -> list[tuple[int, int]]:
    return list(combinations(range(n), 2))


def _check_vertex(x: int, n: int) -> None:
    if not 0 <= x < n:
        raise ValueError(f"vertex {x} out of range [0, {n})")


@dataclass(frozen=True)
class Graph:
    """Simple unweighted graph."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        normed = set()
        for u, v in self.edges:
            _check_vertex(u, self.n)
            _check_vertex(v, self.n)
            normed.add(norm_pair(int(u), int(v)))
        object.__setattr__(self, "edges", frozenset(normed))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        edges = list(edges)
        g = cls(n, frozenset(edges))
        if len(g.edges) != len(edges):
            raise ValueError("duplicate edge in edge list")
        return g

    @property
    def m(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return norm_pair(u, v) in self.edges

    def neighbors(self, v: int) -> set[int]:
        return {b if a == v else a for a, b in self.edges if v in (a, b)}

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1.0
        return a

    def to_weighted(self) -> "WeightedGraph":
        return WeightedGraph(self.n, {e: 1.0 for e in self.edges})

    def induced(self, vertices: Iterable[int]) -> "Graph":
        """Induced subgraph, keeping the original vertex ids."""
        keep = set(vertices)
        return Graph(self.n, frozenset(e for e in self.edges if e[0] in keep and e[1] in keep))

    def union(self, other: "Graph") -> "Graph":
        if other.n != self.n:
            raise ValueError("vertex count mismatch")
        return Graph(self.n, self.edges | other.edges)

    def minus(self, edges: Iterable[tuple[int, int]]) -> "Graph":
        drop = {norm_pair(*e) for e in edges}
        return Graph(self.n, self.edges - drop)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Graph with strictly positive edge weights."""

    n: int
    weights: Mapping = field(default_factory=dict)

    def __post_init__(self):
        normed = {}
        for (u, v), w in self.weights.items():
            _check_vertex(u, self.n)
            _check_vertex(v, self.n)
            w = float(w)
            if not w > 0:
                raise ValueError(f"edge ({u}, {v}) has non-positive weight {w}")
            e = norm_pair(int(u), int(v))
            if e in normed:
                raise ValueError(f"duplicate pair {e}")
            normed[e] = w
        object.__setattr__(self, "weights", dict(sorted(normed.items())))

    def __eq__(self, other):
        return isinstance(other, WeightedGraph) and self.n == other.n and self.weights == other.weights

    __hash__ = None

    @property
    def edges(self) -> frozenset:
        return frozenset(self.weights)

    @property
    def m(self) -> int:
        return len(self.weights)

    def total_weight(self) -> float:
        return float(sum(self.weights.values()))

    def scaled(self, factor: float) -> "WeightedGraph":
        return WeightedGraph(self.n, {e: w * factor for e, w in self.weights.items()})

    def support(self) -> Graph:
        return Graph(self.n, frozenset(self.weights))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for (u, v), w in self.weights.items():
            a[u, v] = a[v, u] = w
        return a

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)


@dataclass(frozen=True, eq=False)
class FractionalGraph:
    """Per-pair weights in [0, 1]; pairs outside ``support`` are implicitly 0."""

    n: int
    support: tuple
    y: np.ndarray

    def __post_init__(self):
        support = tuple(norm_pair(int(u), int(v)) for u, v in self.support)
        y = np.asarray(self.y, dtype=float).copy()
        if y.shape != (len(support),):
            raise ValueError("y must have one entry per support pair")
        if len(set(support)) != len(support):
            raise ValueError("duplicate pair in support")
        for u, v in support:
            _check_vertex(v, self.n)
        if y.size and (y.min() < 0.0 or y.max() > 1.0):
            raise ValueError("fractional weights must lie in [0, 1]")
        y.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "y", y)

    def total_weight(self) -> float:
        return float(self.y.sum())

    def as_weighted(self) -> WeightedGraph:
        return WeightedGraph(self.n, {e: w for e, w in zip(self.support, self.y) if w > 0})

    def value(self, u: int, v: int) -> float:
        e = norm_pair(u, v)
        try:
            return float(self.y[self.support.index(e)])
        except ValueError:
            return 0.0


@dataclass(frozen=True, eq=False)
class Partition:
    """Clustering of ``0..n-1``; cluster ids are canonicalised to ``0..k-1``."""

    n: int
    cluster_of: tuple

    def __post_init__(self):
        labels = list(self.cluster_of)
        if len(labels) != self.n:
            raise ValueError(f"partition covers {len(labels)} vertices, expected {self.n}")
        relabel: dict = {}
        canon = tuple(relabel.setdefault(c, len(relabel)) for c in labels)
        object.__setattr__(self, "cluster_of", canon)

    @classmethod
    def from_clusters(cls, n: int, clusters: Iterable[Iterable[int]]) -> "Partition":
        labels = [-1] * n
        for i, cluster in enumerate(clusters):
            for v in cluster:
                _check_vertex(v, n)
                if labels[v] != -1:
                    raise ValueError(f"vertex {v} assigned twice")
                labels[v] = i
        if -1 in labels:
            raise ValueError(f"vertex {labels.index(-1)} not assigned")
        return cls(n, tuple(labels))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(n, tuple(range(n)))

    @property
    def k(self) -> int:
        return max(self.cluster_of) + 1 if self.n else 0

    def clusters(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for v, c in enumerate(self.cluster_of):
            out[c].append(v)
        return out

    def __eq__(self, other):
        return isinstance(other, Partition) and self.n == other.n and self.cluster_of == other.cluster_of

    def __hash__(self):
        return hash((self.n, self.cluster_of))


AnyGraph = Union[Graph, WeightedGraph]


def weighted_adjacency(g: AnyGraph) -> np.ndarray:
    return g.adjacency()


def total_weight(g: AnyGraph) -> float:
    return float(g.m) if isinstance(g, Graph) else g.total_weight()


def cut_value(g: AnyGraph, s: Iterable[int]) -> float:
    """Total weight of edges with exactly one endpoint in ``s``."""
    side = set()
    for v in s:
        _check_vertex(v, g.n)
        side.add(v)
    if isinstance(g, Graph):
        return float(sum(1 for u, v in g.edges if (u in side) != (v in side)))
    return float(sum(w for (u, v), w in g.weights.items() if (u in side) != (v in side)))


def laplacian(g: AnyGraph) -> np.ndarray:
    a = g.adjacency()
    return np.diag(a.sum(axis=1)) - a


def connected_components(g: AnyGraph) -> list[list[int]]:
    """Components as sorted vertex lists, ordered by smallest vertex."""
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups: dict[int, list[int]] = {}
    for v in range(g.n):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values(), key=lambda c: c[0])


def component_labels(g: AnyGraph) -> np.ndarray:
    labels = np.empty(g.n, dtype=np.int64)
    for i, comp in enumerate(connected_components(g)):
        labels[comp] = i
    return labels


class MinCut(NamedTuple):
    value: float
    side: frozenset
    connected: bool


def stoer_wagner(w: np.ndarray) -> tuple[float, list[int]]:
    """Global minimum cut of a dense symmetric weight matrix.

    Deterministic: every maximum-adjacency phase starts from the lowest
    remaining vertex and ties are broken by smallest vertex id.
    """
    n = w.shape[0]
    if n < 2:
        raise ValueError("minimum cut needs at least two vertices")
    w = np.array(w, dtype=float)
    groups = [[v] for v in range(n)]
    alive = list(range(n))
    best = np.inf
    best_side: list[int] = []
    while len(alive) > 1:
        idx = np.array(alive)
        sub = w[np.ix_(idx, idx)]
        k = len(alive)
        added = np.zeros(k, dtype=bool)
        conn = np.zeros(k)
        order = []
        cur = 0
        for _ in range(k):
            if order:
                masked = np.where(added, -np.inf, conn)
                cur = int(np.argmax(masked))  # argmax returns the first maximum
            added[cur] = True
            order.append(cur)
            conn += sub[cur]
        s, t = order[-2], order[-1]
        cut_of_phase = float(sub[t].sum())
        if cut_of_phase < best:
            best = cut_of_phase
            best_side = list(groups[alive[t]])
        vs, vt = alive[s], alive[t]
        w[vs, :] += w[vt, :]
        w[:, vs] += w[:, vt]
        w[vs, vs] = 0.0
        groups[vs].extend(groups[vt])
        alive.remove(vt)
    return best, sorted(best_side)


def mincut(g: AnyGraph) -> MinCut:
    """Exact global minimum cut.

    A disconnected graph has minimum cut 0; the result then carries
    ``connected=False`` and one component as the witness side.
    """
    if g.n < 2:
        raise ValueError("minimum cut needs at least two vertices")
    comps = connected_components(g)
    if len(comps) > 1:
        return MinCut(0.0, frozenset(comps[0]), False)
    value, side = stoer_wagner(g.adjacency())
    return MinCut(value, frozenset(side), True)


def _check_partition(n: int, p: Partition) -> None:
    if p.n != n:
        raise ValueError(f"partition is over {p.n} vertices but graph has {n}")


def cc_cost(g: Graph, p: Partition) -> int:
    """Disagreements: non-edges inside clusters plus edges between clusters."""
    _check_partition(g.n, p)
    lab = p.cluster_of
    crossing = sum(1 for u, v in g.edges if lab[u] != lab[v])
    inside_pairs = sum(comb(len(c), 2) for c in p.clusters())
    inside_edges = g.m - crossing
    return int(crossing + inside_pairs - inside_edges)


def cc_via_cuts(g: AnyGraph, p: Partition) -> float:
    """Correlation clustering cost written through cluster cuts.

    ``sum_i cut(V_i) + sum_i C(|V_i|, 2) - deg_total / 2``; this is how the
    objective is extended to weighted graphs.
    """
    _check_partition(g.n, p)
    lab = p.cluster_of
    items = ((e, 1.0) for e in g.edges) if isinstance(g, Graph) else g.weights.items()
    cut_sum = 0.0
    half_deg = 0.0
    for (u, v), w in items:
        half_deg += w
        if lab[u] != lab[v]:
            cut_sum += 2.0 * w  # counted once in cut(V_lab[u]) and once in cut(V_lab[v])
    binoms = sum(comb(len(c), 2) for c in p.clusters())
    value = cut_sum + binoms - half_deg
    if isinstance(g, Graph):
        return int(round(value))
    return value


def read_edge_list(path) -> AnyGraph:
    """Read ``n m`` followed by ``u v`` (or ``u v w``) lines.

    Returns a :class:`Graph` when no line carries a weight.
    """
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip() and not ln.startswith("#")]
    n, m = int(lines[0][0]), int(lines[0][1])
    body = lines[1:]
    if len(body) != m:
        raise ValueError(f"header declares {m} edges, found {len(body)}")
    if any(len(parts) > 2 for parts in body):
        return WeightedGraph(n, {(int(p[0]), int(p[1])): float(p[2]) if len(p) > 2 else 1.0 for p in body})
    return Graph.from_edges(n, [(int(p[0]), int(p[1])) for p in body])


def write_edge_list(g: AnyGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{g.n} {g.m}\n")
        if isinstance(g, Graph):
            for u, v in g.sorted_edges():
                fh.write(f"{u} {v}\n")
        else:
            for (u, v), w in g.weights.items():
                fh.write(f"{u} {v} {w:.17g}\n")


def read_partition(path, n: int | None = None) -> Partition:
    with open(path) as fh:
        rows = [ln.split() for ln in fh if ln.strip()]
    labels = {int(v): int(c) for v, c in rows}
    size = len(labels) if n is None else n
    if sorted(labels) != list(range(size)):
        raise ValueError("partition file must assign every vertex exactly once")
    return Partition(size, tuple(labels[v] for v in range(size)))


def write_partition(p: Partition, path) -> None:
    with open(path, "w") as fh:
        for v, c in enumerate(p.cluster_of):
            fh.write(f"{v} {c}\n")


def graph_from_pairs(n: int, pairs: Sequence[tuple[int, int]]) -> Graph:
    return Graph(n, frozenset(pairs))
