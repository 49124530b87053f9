import numpy as np
import pytest

from desparse.graphcore import Graph, all_pairs


def clique_union_graph(sizes, bridges=()):
    edges = []
    off = 0
    for s in sizes:
        edges += [(off + i, off + j) for i in range(s) for j in range(i + 1, s)]
        off += s
    return Graph.from_edges(off, list(edges) + list(bridges))


def complete_graph(n):
    return Graph.from_edges(n, all_pairs(n))


def random_graph(rng, n, p):
    return Graph.from_edges(n, [e for e in all_pairs(n) if rng.random() < p])


def random_partition(rng, n):
    from desparse.graphcore import Partition

    k = int(rng.integers(1, n + 1)) if n else 1
    return Partition(n, tuple(int(x) for x in rng.integers(0, k, size=n)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
