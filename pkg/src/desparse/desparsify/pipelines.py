"""Composed de-sparsification: weighted sparsifier -> fractional program -> simple graph."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from ..graphcore import Graph, WeightedGraph, component_labels, connected_components, mincut
from ..profiles import DESK, Profile, get_profile
from ..sketches import SketchSuite, recover_spectral, recover_weak_edges
from ..spectral import resistance_matrix
from .program import fractional_sparsifier
from .rounding import round_exact_weight

COMPOSED_BAND = 5.0  # final guarantee is (1 +- 5 eps)


class PreconditionWarning(UserWarning):
    """The input misses a precondition; the output carries no guarantee."""


@dataclass
class Provenance:
    lam: Optional[float] = None
    weak_edges: int = 0
    components: list = field(default_factory=list)
    program_eps: float = 0.0
    ellipsoid_iterations: int = 0
    ellipsoid_stage: str = ""
    rounding_attempts: int = 0
    fixed_edges: int = 0
    verdicts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "T": self.weak_edges,
            "k": len(self.components),
            "component_sizes": [len(c) for c in self.components],
            "program_eps": self.program_eps,
            "ellipsoid_iterations": self.ellipsoid_iterations,
            "ellipsoid_stage": self.ellipsoid_stage,
            "rounding_attempts": self.rounding_attempts,
            "fixed_edges": self.fixed_edges,
            "verdicts": dict(self.verdicts),
        }


class Desparsified(NamedTuple):
    graph: Graph
    provenance: Provenance


def program_band(eps: float) -> float:
    """Band for the program when ``h`` is only a ``(1 +- eps)`` image of the hidden graph.

    The hidden graph sits within ``[1/(1+eps), 1/(1-eps)]`` of ``h``, so it is
    a feasible point at ``eps / (1 - eps)``.
    """
    return min(0.99, eps / (1 - eps))


def _rng(rng, seed) -> np.random.Generator:
    if rng is not None:
        return rng
    return np.random.default_rng(0 if seed is None else seed)


def solve_and_round(
    target: WeightedGraph,
    total: int,
    eps: float,
    rng: np.random.Generator,
    support: Optional[Sequence] = None,
    offset: Optional[WeightedGraph] = None,
    max_iters: Optional[int] = None,
    max_attempts: Optional[int] = None,
    prov: Optional[Provenance] = None,
) -> Graph:
    """Fractional program at band ``eps`` followed by exact-count rounding."""
    y, report = fractional_sparsifier(target, total, eps, support=support, offset=offset, max_iters=max_iters)
    rounded = round_exact_weight(y, int(round(total)), rng, max_attempts=max_attempts)
    if prov is not None:
        prov.program_eps = eps
        prov.ellipsoid_iterations += report.iterations
        prov.ellipsoid_stage = report.stage
        prov.rounding_attempts += rounded.attempts
    return rounded.graph


def _check_mincut(h: WeightedGraph, eps: float, profile: Profile) -> None:
    need = profile.round_threshold(h.n, eps)
    for comp in connected_components(h):
        if len(comp) < 2:
            continue
        sub = WeightedGraph(len(comp), {
            (comp.index(u), comp.index(v)): w for (u, v), w in h.weights.items() if u in comp
        })
        value = mincut(sub).value
        if value < need:
            warnings.warn(
                f"component mincut {value:.4g} is below the rounding threshold {need:.4g}",
                PreconditionWarning,
                stacklevel=3,
            )
            return


def desparsify_cut(
    h: WeightedGraph,
    m: int,
    eps: float,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
    profile=DESK,
    max_iters: Optional[int] = None,
    max_attempts: Optional[int] = None,
) -> Desparsified:
    """Simple ``m``-edge graph whose cuts track those of the graph ``h`` approximates."""
    profile = get_profile(profile)
    _check_mincut(h, eps, profile)
    prov = Provenance(components=connected_components(h))
    g = solve_and_round(h, m, program_band(eps), _rng(rng, seed), max_iters=max_iters, max_attempts=max_attempts, prov=prov)
    return Desparsified(g, prov)


def max_pair_resistance(h: WeightedGraph) -> float:
    """Largest effective resistance over pairs in a common component."""
    if h.n < 2:
        return 0.0
    r = resistance_matrix(h)
    finite = r[np.isfinite(r)]
    return float(finite.max()) if finite.size else 0.0


def desparsify_spectral(
    h: WeightedGraph,
    m: int,
    eps: float,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
    profile=DESK,
    max_iters: Optional[int] = None,
    max_attempts: Optional[int] = None,
) -> Desparsified:
    """As ``desparsify_cut``, for inputs whose pair resistances are all small."""
    profile = get_profile(profile)
    limit = profile.er_threshold(h.n, eps)
    worst = max_pair_resistance(h)
    if worst > limit:
        warnings.warn(
            f"max pair effective resistance {worst:.4g} exceeds {limit:.4g}",
            PreconditionWarning,
            stacklevel=2,
        )
    prov = Provenance(components=connected_components(h))
    g = solve_and_round(h, m, program_band(eps), _rng(rng, seed), max_iters=max_iters, max_attempts=max_attempts, prov=prov)
    return Desparsified(g, prov)


def _suite_rng(suite: SketchSuite, rng, seed) -> np.random.Generator:
    if rng is not None:
        return rng
    return np.random.default_rng([suite.seed if seed is None else seed, 3])


def desparsify_from_sketch(
    suite: SketchSuite,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
    max_iters: Optional[int] = None,
    max_attempts: Optional[int] = None,
) -> Desparsified:
    """Weak edges kept verbatim plus a de-sparsified copy of the strong part.

    May raise ``SketchRecoveryError``; the caller retries with a new seed.
    """
    n, eps = suite.n, suite.eps
    weak = recover_weak_edges(suite.s1)
    h = recover_spectral(suite.s2, exclude=weak)
    m = suite.edge_count()
    comps = connected_components(h)
    prov = Provenance(lam=suite.lam, weak_edges=len(weak), components=comps, fixed_edges=len(weak))
    rest = m - len(weak)
    if rest < 0:
        raise ValueError(f"sketch holds {m} edges but {len(weak)} weak edges were recovered")
    strong = solve_and_round(h, rest, program_band(eps), _suite_rng(suite, rng, seed),
                             max_iters=max_iters, max_attempts=max_attempts, prov=prov)
    labels = component_labels(h)
    crossing = [e for e in strong.edges if labels[e[0]] != labels[e[1]]]
    assert not crossing, f"rounded edge {crossing[0]} joins two strong components"
    assert not (strong.edges & weak), "rounded edges overlap the weak edges"
    out = Graph(n, strong.edges | weak)
    assert out.m == m
    return Desparsified(out, prov)


def candidate_pairs(h: WeightedGraph, fixed: frozenset, threshold: float) -> list[tuple[int, int]]:
    """Pairs outside ``fixed`` whose effective resistance in ``h`` is at most ``threshold``."""
    if h.n < 2:
        return []
    r = resistance_matrix(h)
    iu, iv = np.nonzero(np.triu(r <= threshold, k=1))
    return [(int(u), int(v)) for u, v in zip(iu, iv) if (u, v) not in fixed]


def desparsify_spectral_from_sketch(
    suite: SketchSuite,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
    profile=DESK,
    max_iters: Optional[int] = None,
    max_attempts: Optional[int] = None,
) -> Desparsified:
    """Recovered edges kept with weight 1; low-resistance pairs filled in by the program."""
    profile = get_profile(profile)
    n, eps = suite.n, suite.eps
    h = recover_spectral(suite.s2)
    fixed = h.edges
    m = suite.edge_count()
    prov = Provenance(components=connected_components(h), fixed_edges=len(fixed))
    rest = m - len(fixed)
    if rest < 0:
        raise ValueError(f"sketch holds {m} edges but {len(fixed)} were recovered")
    offset = WeightedGraph(n, {e: 1.0 for e in fixed})
    support = candidate_pairs(h, fixed, profile.ehat_threshold(n, eps))
    filled = solve_and_round(h, rest, program_band(eps), _suite_rng(suite, rng, seed), support=support,
                             offset=offset, max_iters=max_iters, max_attempts=max_attempts, prov=prov)
    assert not (filled.edges & fixed)
    out = Graph(n, filled.edges | fixed)
    assert out.m == m
    return Desparsified(out, prov)
