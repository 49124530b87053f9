from itertools import combinations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from desparse.graphcore import (
    FractionalGraph,
    Graph,
    Partition,
    WeightedGraph,
    all_pairs,
    cc_cost,
    cc_via_cuts,
    connected_components,
    cut_value,
    laplacian,
    mincut,
    pair_index,
    read_edge_list,
    read_partition,
    stoer_wagner,
    write_edge_list,
    write_partition,
)

from conftest import complete_graph, random_graph, random_partition


def cc_by_pairs(g, p):
    lab = p.cluster_of
    cost = 0
    for u, v in combinations(range(g.n), 2):
        together = lab[u] == lab[v]
        cost += together != g.has_edge(u, v)
    return cost


def test_pair_index_is_lexicographic():
    for n in range(2, 9):
        assert [pair_index(u, v, n) for u, v in all_pairs(n)] == list(range(n * (n - 1) // 2))
    assert pair_index(3, 1, 5) == pair_index(1, 3, 5)


def test_graph_normalises_and_rejects():
    g = Graph.from_edges(3, [(1, 0), (2, 1)])
    assert g.edges == {(0, 1), (1, 2)}
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 3)])
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 1)])


def test_weighted_graph_rejects_nonpositive():
    with pytest.raises(ValueError):
        WeightedGraph(3, {(0, 1): 0.0})
    w = WeightedGraph(3, {(1, 0): 2.5})
    assert w.total_weight() == 2.5 and w.edges == {(0, 1)}


def test_fractional_graph_bounds():
    f = FractionalGraph(3, ((0, 1), (1, 2)), [0.25, 1.0])
    assert f.total_weight() == 1.25
    assert f.value(2, 1) == 1.0 and f.value(0, 2) == 0.0
    with pytest.raises(ValueError):
        FractionalGraph(3, ((0, 1),), [1.5])


def test_partition_canonical_and_validation():
    p = Partition(4, (7, 7, 3, 9))
    assert p.cluster_of == (0, 0, 1, 2) and p.k == 3
    assert Partition.from_clusters(4, [[2], [0, 1], [3]]) == Partition(4, (1, 1, 0, 2))
    with pytest.raises(ValueError):
        Partition.from_clusters(3, [[0, 1], [1, 2]])
    with pytest.raises(ValueError):
        Partition.from_clusters(3, [[0, 1]])


def test_cut_value_examples():
    k4 = complete_graph(4)
    assert cut_value(k4, [0]) == 3
    assert cut_value(k4, [0, 1]) == 4
    w = WeightedGraph(3, {(0, 1): 0.5, (1, 2): 2.0})
    assert cut_value(w, [1]) == 2.5


def test_laplacian_rows_sum_to_zero(rng):
    g = random_graph(rng, 9, 0.5)
    lap = laplacian(g)
    assert np.allclose(lap.sum(axis=1), 0)
    ng = nx.Graph()
    ng.add_nodes_from(range(9))
    ng.add_edges_from(g.edges)
    assert np.allclose(lap, nx.laplacian_matrix(ng, nodelist=range(9)).toarray())


def test_components_sorted():
    g = Graph.from_edges(6, [(4, 5), (0, 2)])
    assert connected_components(g) == [[0, 2], [1], [3], [4, 5]]


def test_stoer_wagner_matches_networkx(rng):
    for _ in range(40):
        n = int(rng.integers(2, 12))
        g = random_graph(rng, n, 0.5)
        if len(connected_components(g)) > 1:
            continue
        ng = nx.Graph()
        ng.add_nodes_from(range(n))
        ng.add_edges_from(g.edges)
        expected, _ = nx.stoer_wagner(ng)
        value, side = stoer_wagner(g.adjacency())
        assert value == expected
        assert cut_value(g, side) == value


def test_mincut_examples():
    assert mincut(complete_graph(4)).value == 3
    res = mincut(Graph.from_edges(4, [(0, 1), (2, 3)]))
    assert res.value == 0 and not res.connected
    with pytest.raises(ValueError):
        mincut(Graph(1))


def test_cc_examples():
    tri = complete_graph(3)
    assert cc_cost(tri, Partition.singletons(3)) == 3
    assert cc_via_cuts(tri, Partition.singletons(3)) == 3
    assert cc_cost(tri, Partition(3, (0, 0, 0))) == 0
    p3 = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert cc_cost(p3, Partition(3, (0, 0, 0))) == 1
    with pytest.raises(ValueError):
        cc_cost(tri, Partition.singletons(4))


def test_cc_cost_matches_pair_oracle(rng):
    for _ in range(300):
        n = int(rng.integers(1, 10))
        g = random_graph(rng, n, rng.random())
        p = random_partition(rng, n)
        assert cc_cost(g, p) == cc_by_pairs(g, p)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 9).flatmap(lambda n: st.tuples(
    st.just(n),
    st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] < e[1])),
    st.lists(st.integers(0, n - 1), min_size=n, max_size=n),
)))
def test_cc_identity_property(data):
    n, edges, labels = data
    g = Graph(n, frozenset(edges))
    p = Partition(n, tuple(labels))
    assert cc_via_cuts(g, p) == cc_cost(g, p)


def test_cc_via_cuts_weighted_matches_unit_weights(rng):
    g = random_graph(rng, 8, 0.5)
    p = random_partition(rng, 8)
    assert cc_via_cuts(g.to_weighted(), p) == pytest.approx(cc_cost(g, p))


def test_edge_list_round_trip(tmp_path, rng):
    g = random_graph(rng, 7, 0.5)
    write_edge_list(g, tmp_path / "g.txt")
    assert read_edge_list(tmp_path / "g.txt") == g
    w = WeightedGraph(4, {(0, 1): 0.1, (2, 3): 1.0 / 3})
    write_edge_list(w, tmp_path / "w.txt")
    assert read_edge_list(tmp_path / "w.txt") == w
    p = Partition(5, (0, 1, 0, 2, 1))
    write_partition(p, tmp_path / "p.txt")
    assert read_partition(tmp_path / "p.txt") == p
