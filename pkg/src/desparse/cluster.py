"""Correlation clustering backends and clustering through a de-sparsified sketch."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .desparsify.pipelines import Desparsified, desparsify_from_sketch
from .graphcore import Graph, Partition, cc_cost
from .sketches import SketchSuite

MAX_BRUTEFORCE_N = 9
BACKENDS = ("pivot", "brute_force")


@dataclass(frozen=True)
class ClusteringResult:
    partition: Partition
    cost: int
    backend: str
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {"cost": self.cost, "k": self.partition.k, "backend": self.backend, "seed": self.seed}


def pivot_partition(g: Graph, rng: np.random.Generator) -> Partition:
    """One run of Pivot over a uniformly random vertex order."""
    order = rng.permutation(g.n)
    nbrs = [set() for _ in range(g.n)]
    for u, v in g.edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    cluster_of = [-1] * g.n
    k = 0
    for pivot in order:
        if cluster_of[pivot] >= 0:
            continue
        cluster_of[pivot] = k
        for w in nbrs[pivot]:
            if cluster_of[w] < 0:
                cluster_of[w] = k
        k += 1
    return Partition(g.n, tuple(cluster_of))


def pivot_cc(g: Graph, rng: Optional[np.random.Generator] = None, seed: Optional[int] = None, restarts: int = 1) -> ClusteringResult:
    """Pivot clustering; with ``restarts > 1`` the cheapest of several runs is kept.

    Runs use seeds ``seed, seed + 1, ...`` when ``rng`` is not supplied, so the
    result is a pure function of ``(g, seed, restarts)``.
    """
    best = None
    for r in range(max(1, restarts)):
        gen = rng if rng is not None else np.random.default_rng(None if seed is None else seed + r)
        p = pivot_partition(g, gen)
        cost = cc_cost(g, p)
        if best is None or cost < best[1]:
            best = (p, cost)
    return ClusteringResult(best[0], best[1], "pivot", seed)


def restricted_growth_strings(n: int):
    """All set partitions of ``0..n-1`` as canonical label tuples."""
    if n == 0:
        yield ()
        return
    labels = [0] * n

    def rec(i: int, top: int):
        if i == n:
            yield tuple(labels)
            return
        for c in range(top + 1):
            labels[i] = c
            yield from rec(i + 1, max(top, c + 1))

    labels[0] = 0
    yield from rec(1, 1)


def brute_force_cc(g: Graph) -> ClusteringResult:
    """Exact optimum by enumerating all set partitions (Bell(n) of them)."""
    if g.n > MAX_BRUTEFORCE_N:
        raise ValueError(f"n={g.n} exceeds the brute-force limit {MAX_BRUTEFORCE_N}")
    if g.n == 0:
        p = Partition(0, ())
        return ClusteringResult(p, 0, "brute_force")
    labels = np.array(list(restricted_growth_strings(g.n)), dtype=np.int8)
    same = labels[:, :, None] == labels[:, None, :]
    adj = g.adjacency().astype(bool)
    iu = np.triu_indices(g.n, k=1)
    disagree = (same[:, iu[0], iu[1]] != adj[iu]).sum(axis=1)
    best = int(np.argmin(disagree))
    p = Partition(g.n, tuple(int(x) for x in labels[best]))
    return ClusteringResult(p, int(disagree[best]), "brute_force")


def run_backend(g: Graph, backend: str = "pivot", seed: Optional[int] = None, restarts: int = 16) -> ClusteringResult:
    if backend == "pivot":
        return pivot_cc(g, seed=0 if seed is None else seed, restarts=restarts)
    if backend in ("brute", "brute_force"):
        return brute_force_cc(g)
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True)
class SketchClustering:
    result: ClusteringResult
    sparsifier: Graph
    provenance: dict
    audited: bool


def cluster_from_sketch(
    suite: SketchSuite,
    backend: str = "pivot",
    audit_graph: Optional[Graph] = None,
    seed: Optional[int] = None,
    restarts: int = 16,
    desparsifier: Callable[..., Desparsified] = desparsify_from_sketch,
) -> SketchClustering:
    """Cluster the de-sparsified graph; cost is reported on ``audit_graph`` when given."""
    g_tilde, prov = desparsifier(suite, seed=seed)
    res = run_backend(g_tilde, backend, seed=suite.seed if seed is None else seed, restarts=restarts)
    if audit_graph is not None:
        res = ClusteringResult(res.partition, cc_cost(audit_graph, res.partition), res.backend, res.seed)
    return SketchClustering(res, g_tilde, prov.to_dict(), audit_graph is not None)
