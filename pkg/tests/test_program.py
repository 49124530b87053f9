import time

import numpy as np
import pytest

from desparse.desparsify import (
    InfeasibleProgram,
    Ok,
    ProgramSpec,
    Violation,
    ellipsoid_feasibility,
    fractional_sparsifier,
    program_band,
    separation_oracle,
)
from desparse.graphcore import FractionalGraph, Graph, WeightedGraph, all_pairs
from desparse.spectral import effective_resistance_sample, is_spectral_sparsifier

from conftest import clique_union_graph, complete_graph, random_graph


def spec_for(g, eps=0.3, total=None, support=None, offset=None):
    support = tuple(all_pairs(g.n)) if support is None else tuple(support)
    return ProgramSpec(g.n, g.to_weighted(), support, g.m if total is None else total, eps, offset)


def indicator(spec, edges):
    return np.array([1.0 if e in edges else 0.0 for e in spec.support])


def test_spec_validation():
    g = complete_graph(3)
    with pytest.raises(ValueError):
        ProgramSpec(3, g.to_weighted(), ((0, 1), (1, 0)), 1, 0.3)
    with pytest.raises(ValueError):
        ProgramSpec(3, g.to_weighted(), ((0, 1),), -1, 0.3)
    with pytest.raises(ValueError):
        ProgramSpec(3, g.to_weighted(), ((0, 1),), 1, 0.3, WeightedGraph(3, {(0, 1): 1.0}))
    with pytest.raises(ValueError):
        ProgramSpec(4, g.to_weighted(), ((0, 1),), 1, 0.3)


def test_oracle_accepts_the_graph_itself(rng):
    g = random_graph(rng, 8, 0.6)
    spec = spec_for(g)
    assert isinstance(separation_oracle(spec, indicator(spec, g.edges)), Ok)
    f = FractionalGraph(8, g.sorted_edges(), np.ones(g.m))
    assert isinstance(separation_oracle(spec, f), Ok)


def test_oracle_zero_point_is_spectral_lower():
    g = complete_graph(5)
    spec = spec_for(g, total=0)
    res = separation_oracle(spec, np.zeros(spec.d))
    assert isinstance(res, Violation) and res.kind == "spectral_lower"
    assert res.data["eigenvalue"] == pytest.approx(0.0, abs=1e-12)
    assert res.data["direction"] == "lower"


def test_oracle_order_box_weight_components():
    g = clique_union_graph([3, 3])
    spec = spec_for(g)
    y = indicator(spec, g.edges)
    y[0] = 1.5
    assert separation_oracle(spec, y).kind == "box"
    y = indicator(spec, g.edges)
    y[spec.support.index((0, 1))] = 0.0
    res = separation_oracle(spec, y)
    assert res.kind == "weight" and res.data["sum"] == g.m - 1
    y = indicator(spec, g.edges)
    y[spec.support.index((0, 1))] = 0.5
    y[spec.support.index((0, 3))] = 0.5
    res = separation_oracle(spec, y)
    assert res.kind == "components" and res.data["pair"] == (0, 3)


def test_oracle_upper_violation_and_witness():
    g = complete_graph(4)
    spec = spec_for(g, support=g.sorted_edges(), total=6)
    y = np.ones(6)
    spec2 = ProgramSpec(4, g.to_weighted().scaled(0.5), spec.support, 6, 0.3)
    res = separation_oracle(spec2, y)
    assert res.kind == "spectral_upper" and res.data["eigenvalue"] == pytest.approx(2.0)
    z = res.data["witness"]
    assert np.linalg.norm(z) == pytest.approx(1.0)


def test_oracle_rejects_foreign_support():
    g = complete_graph(3)
    spec = spec_for(g, support=[(0, 1), (1, 2)], total=2)
    with pytest.raises(ValueError):
        separation_oracle(spec, FractionalGraph(3, ((0, 2),), [1.0]))
    with pytest.raises(ValueError):
        separation_oracle(spec, np.ones(3))


def test_cuts_are_valid_for_feasible_points(rng):
    """Every returned halfspace keeps the known feasible point and excludes the query."""
    for _ in range(20):
        g = random_graph(rng, 7, 0.6)
        spec = spec_for(g, eps=0.2)
        truth = indicator(spec, g.edges)
        for _ in range(20):
            y = rng.uniform(-0.2, 1.2, spec.d)
            res = separation_oracle(spec, y)
            if isinstance(res, Ok):
                continue
            assert res.normal @ y > res.bound - 1e-12
            assert res.normal @ truth <= res.bound + 1e-9


def test_ellipsoid_examples():
    tri = complete_graph(3)
    rep = ellipsoid_feasibility(spec_for(tri))
    assert rep.feasible
    assert isinstance(separation_oracle(spec_for(tri), rep.point), Ok)
    rep = ellipsoid_feasibility(spec_for(complete_graph(4), total=0))
    assert not rep.feasible


def test_ellipsoid_component_mismatch():
    c8 = Graph.from_edges(8, [(i, (i + 1) % 8) for i in range(8)])
    matching = WeightedGraph(8, {(0, 1): 2.0, (2, 3): 2.0, (4, 5): 2.0, (6, 7): 2.0})
    spec = ProgramSpec(8, matching, tuple(c8.sorted_edges()), 8, 0.3)
    rep = ellipsoid_feasibility(spec)
    assert not rep.feasible and rep.stage == "components"


def test_ellipsoid_solves_nontrivial_programs(rng):
    for _ in range(8):
        n = int(rng.integers(6, 11))
        g = random_graph(rng, n, 0.6)
        if g.m == 0:
            continue
        y, rep = fractional_sparsifier(g.to_weighted(), g.m, 0.3)
        assert rep.feasible and rep.stage == "spectral"
        assert y.total_weight() == pytest.approx(g.m, abs=1e-9)
        assert is_spectral_sparsifier(y.as_weighted(), g, 0.3).ok


def test_ellipsoid_declares_infeasibility():
    g = complete_graph(6)
    spec = spec_for(g, eps=0.1, total=10)
    start = time.time()
    rep = ellipsoid_feasibility(spec)
    assert not rep.feasible
    assert rep.stage in ("volume", "spectral_lower", "spectral_upper")
    assert time.time() - start < 60
    with pytest.raises(InfeasibleProgram):
        fractional_sparsifier(g.to_weighted(), 10, 0.1)


def test_ellipsoid_max_iters():
    g = random_graph(np.random.default_rng(3), 9, 0.5)
    rep = ellipsoid_feasibility(spec_for(g, eps=0.05), max_iters=2)
    assert not rep.feasible and rep.stage == "max_iters" and rep.iterations == 2


def test_degenerate_supports():
    g = complete_graph(3)
    rep = ellipsoid_feasibility(ProgramSpec(3, g.to_weighted(), (), 0, 0.3, g.to_weighted()))
    assert rep.feasible and rep.point.support == ()
    rep = ellipsoid_feasibility(ProgramSpec(3, g.to_weighted(), (), 2, 0.3))
    assert not rep.feasible


def test_fractional_sparsifier_of_sampled_k8(rng):
    k8 = complete_graph(8)
    h = effective_resistance_sample(k8, 0.1, 0.02, rng)
    v = is_spectral_sparsifier(h, k8, 0.99)
    eps = program_band(max(0.1, 1 - v.min_eigenvalue, v.max_eigenvalue - 1))
    y, rep = fractional_sparsifier(h, 28, eps)
    assert y.total_weight() == pytest.approx(28)
    assert isinstance(separation_oracle(ProgramSpec(8, h, y.support, 28, eps), y), Ok)


def test_offset_program():
    g = clique_union_graph([5, 5], [(0, 5)])
    offset = WeightedGraph(10, {(0, 5): 1.0, (0, 1): 1.0})
    support = [e for e in all_pairs(10) if e not in offset.weights and (e[0] < 5) == (e[1] < 5)]
    y, rep = fractional_sparsifier(g.to_weighted(), g.m - 2, 0.3, support=support, offset=offset)
    combined = WeightedGraph(10, {**y.as_weighted().weights, **offset.weights})
    assert is_spectral_sparsifier(combined, g, 0.3).ok
