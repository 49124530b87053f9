"""Seeded graph families used by the demos, tests and the CLI."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .graphcore import Graph, norm_pair


def clique_union(sizes: Sequence[int], bridges: int = 0, seed: int = 0) -> Graph:
    """Disjoint cliques plus ``bridges`` extra edges between consecutive cliques."""
    rng = np.random.default_rng(seed)
    edges = set()
    starts = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    for s, size in zip(starts, sizes):
        edges.update((s + i, s + j) for i in range(size) for j in range(i + 1, size))
    if bridges and len(sizes) < 2:
        raise ValueError("bridges need at least two cliques")
    for b in range(bridges):
        a = b % (len(sizes) - 1) if len(sizes) > 1 else 0
        for _ in range(1000):
            u = int(starts[a] + rng.integers(sizes[a]))
            v = int(starts[a + 1] + rng.integers(sizes[a + 1]))
            if norm_pair(u, v) not in edges:
                edges.add(norm_pair(u, v))
                break
        else:
            raise ValueError("could not place a new bridge")
    return Graph(int(starts[-1]), frozenset(edges))


def random_gnp(n: int, p: float, seed: int = 0) -> Graph:
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    iu, iv = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return Graph(n, frozenset(zip(iu[keep].tolist(), iv[keep].tolist())))


def expander_like(n: int, degree: int = 4, seed: int = 0) -> Graph:
    """Union of ``degree // 2`` random Hamiltonian cycles."""
    if n < 3 or degree < 2:
        raise ValueError("need n >= 3 and degree >= 2")
    rng = np.random.default_rng(seed)
    edges = set()
    for _ in range(degree // 2):
        perm = rng.permutation(n)
        edges.update(norm_pair(int(perm[i]), int(perm[(i + 1) % n])) for i in range(n))
    return Graph(n, frozenset(edges))


def random_tree(n: int, seed: int = 0) -> Graph:
    """Each vertex ``v > 0`` attaches to a uniformly random earlier vertex."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    return Graph(n, frozenset((int(rng.integers(v)), v) for v in range(1, n)))


def cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    return Graph(n, frozenset(norm_pair(i, (i + 1) % n) for i in range(n)))


def complete(n: int) -> Graph:
    return Graph(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))
