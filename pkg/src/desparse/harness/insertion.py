"""Deterministic insertion-only pipeline: spanner sequence plus a streaming sparsifier.

While the stream runs nothing random happens: every edge either joins the
first spanner it does not close a short cycle in, or overflows into a
merge-and-reduce spectral sparsifier.  Randomness is only used afterwards to
round the fractional program.
"""
from __future__ import annotations

import hashlib
import math
import struct
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from ..cluster import ClusteringResult, run_backend
from ..desparsify.pipelines import Provenance, program_band, solve_and_round
from ..graphcore import Graph, WeightedGraph, laplacian, norm_pair
from ..profiles import DESK, get_profile, stretch
from ..spectral import is_spectral_sparsifier, resistance_matrix, whitening
from .streams import StreamEvent

OVERFLOW = -1


class RandomnessBeforeStreamEnd(RuntimeError):
    pass


class GuardedRng:
    """Generator wrapper that refuses to produce numbers until released."""

    def __init__(self, seed):
        self._gen = np.random.default_rng(seed)
        self.released = False
        self.draws = 0

    def release(self) -> None:
        self.released = True

    def __getattr__(self, name):
        attr = getattr(self._gen, name)
        if not callable(attr):
            return attr

        def guarded(*args, **kwargs):
            if not self.released:
                raise RandomnessBeforeStreamEnd(f"rng.{name} called before the stream ended")
            self.draws += 1
            return attr(*args, **kwargs)

        return guarded


class SpannerSequence:
    """Edge-disjoint subgraphs ``T_1..T_l`` built greedily with a stretch bound.

    An edge joins the first ``T_i`` in which its endpoints are at distance at
    least ``stretch`` (so it closes no cycle of length ``<= stretch``).
    """

    def __init__(self, n: int, ell: int, stretch_: Optional[int] = None):
        if ell < 1:
            raise ValueError("need at least one spanner")
        self.n = n
        self.ell = ell
        self.stretch = stretch(n) if stretch_ is None else stretch_
        self.adj = [[set() for _ in range(n)] for _ in range(ell)]
        self.forests: list[list[tuple[int, int]]] = [[] for _ in range(ell)]
        self._where: dict[tuple[int, int], int] = {}

    def distance(self, i: int, u: int, v: int, limit: int) -> int:
        """BFS distance from u to v in ``T_i`` if at most ``limit``, else ``limit + 1``."""
        if u == v:
            return 0
        adj = self.adj[i]
        seen = {u}
        frontier = deque([(u, 0)])
        while frontier:
            x, dist = frontier.popleft()
            if dist == limit:
                continue
            for y in adj[x]:
                if y == v:
                    return dist + 1
                if y not in seen:
                    seen.add(y)
                    frontier.append((y, dist + 1))
        return limit + 1

    def placement(self, e: tuple[int, int]) -> Optional[int]:
        return self._where.get(norm_pair(*e))

    def union(self) -> Graph:
        return Graph(self.n, frozenset(self._where))

    def sizes(self) -> list[int]:
        return [len(f) for f in self.forests]

    def to_bytes(self) -> bytes:
        parts = [struct.pack("<III", self.n, self.ell, self.stretch)]
        for forest in self.forests:
            parts.append(struct.pack("<I", len(forest)))
            parts.append(np.array(forest, dtype="<u4").reshape(-1, 2).tobytes())
        return b"".join(parts)


def spanner_insert(seq: SpannerSequence, e: tuple[int, int]) -> int:
    """Index of the spanner that takes ``e``, or ``OVERFLOW``."""
    u, v = e = norm_pair(*e)
    if u == v or not 0 <= u < seq.n or not 0 <= v < seq.n:
        raise ValueError(f"invalid edge {e}")
    if e in seq._where:
        raise ValueError(f"edge {e} already placed in spanner {seq._where[e]}")
    for i in range(seq.ell):
        if seq.distance(i, u, v, seq.stretch - 1) >= seq.stretch:
            seq.adj[i][u].add(v)
            seq.adj[i][v].add(u)
            seq.forests[i].append(e)
            seq._where[e] = i
            return i
    return OVERFLOW


def barrier_parameter(eps: float) -> float:
    """Smallest ``q`` whose barrier guarantee reaches relative error ``eps``.

    After ``q * r`` steps the condition number is ``((sqrt q + 1)/(sqrt q - 1))^2``,
    i.e. a band of half-width ``2 sqrt(q) / (q + 1)`` around the midpoint.
    """
    x = (1 + math.sqrt(max(0.0, 1 - eps * eps))) / eps
    return x * x


def barrier_sparsify(g: WeightedGraph, eps: float) -> Optional[WeightedGraph]:
    """Deterministic twice-Ramanujan style reweighting of ``g``'s edges.

    Runs ``ceil(q * r)`` greedy barrier steps over the whitened edge vectors
    (``r`` = Laplacian rank) and rescales so the spectrum is centred at 1.
    Returns ``None`` when the step budget is not below the edge count.
    """
    edges = sorted(g.weights)
    if not edges:
        return g
    q_par = barrier_parameter(eps)
    qmat = whitening(laplacian(g))
    r = qmat.shape[1]
    steps = math.ceil(q_par * r)
    if steps >= len(edges) or r == 0:
        return None
    idx = np.array(edges)
    w = np.array([g.weights[e] for e in edges])
    vecs = (qmat[idx[:, 0]] - qmat[idx[:, 1]]) * np.sqrt(w)[:, None]  # rows sum to I in outer product
    sq = math.sqrt(q_par)
    delta_l, delta_u = 1.0, (sq + 1) / (sq - 1)
    eps_l, eps_u = 1 / sq, (sq - 1) / (q_par + sq)
    lo, hi = -r / eps_l, r / eps_u
    a_mat = np.zeros((r, r))
    coef = np.zeros(len(edges))
    eye = np.eye(r)
    for _ in range(steps):
        nlo, nhi = lo + delta_l, hi + delta_u
        up_inv = np.linalg.inv(nhi * eye - a_mat)
        lo_inv = np.linalg.inv(a_mat - nlo * eye)
        phi_u_diff = np.trace(np.linalg.inv(hi * eye - a_mat)) - np.trace(up_inv)
        phi_l_diff = np.trace(lo_inv) - np.trace(np.linalg.inv(a_mat - lo * eye))
        up_v = vecs @ up_inv
        lo_v = vecs @ lo_inv
        u_val = np.einsum("ij,ij->i", up_v, up_v) / phi_u_diff + np.einsum("ij,ij->i", up_v, vecs)
        l_val = np.einsum("ij,ij->i", lo_v, lo_v) / phi_l_diff - np.einsum("ij,ij->i", lo_v, vecs)
        j = int(np.argmax(l_val - u_val))
        t = 2.0 / (u_val[j] + l_val[j])
        coef[j] += t
        a_mat += t * np.outer(vecs[j], vecs[j])
        lo, hi = nlo, nhi
    vals = np.linalg.eigvalsh(a_mat)
    scale = 2.0 / (vals[0] + vals[-1])
    kept = {e: float(g.weights[e] * c * scale) for e, c in zip(edges, coef) if c > 0}
    return WeightedGraph(g.n, kept)


def _merge(a: WeightedGraph, b: WeightedGraph) -> WeightedGraph:
    out = dict(a.weights)
    for e, w in b.weights.items():
        out[e] = out.get(e, 0.0) + w
    return WeightedGraph(a.n, out)


def _reduce(g: WeightedGraph, eps: float) -> WeightedGraph:
    """Barrier reduction if it shrinks the block and passes the eigen check."""
    h = barrier_sparsify(g, eps)
    if h is None or h.m >= g.m or not is_spectral_sparsifier(h, g, eps).ok:
        return g
    return h


class StreamingSparsifier:
    """Merge-and-reduce over blocks of arriving edges.

    A full buffer becomes a level-0 block; two blocks of level ``i`` are
    merged and reduced into one of level ``i + 1``.  The error budget of level
    ``i`` is ``ln(1 + eps) / 2^(i+1)``, so errors along any merge path
    multiply to within ``1 +- eps``.
    """

    def __init__(self, n: int, eps: float, block: Optional[int] = None):
        self.n = n
        self.eps = eps
        self.block = max(4 * n, 16) if block is None else block
        self.buffer: list[tuple[int, int]] = []
        self.levels: list[Optional[WeightedGraph]] = []
        self.count = 0

    def level_eps(self, i: int) -> float:
        return math.log1p(self.eps) / 2 ** (i + 1)

    def push(self, e: tuple[int, int]) -> None:
        self.buffer.append(norm_pair(*e))
        self.count += 1
        if len(self.buffer) >= self.block:
            carry = _reduce(WeightedGraph(self.n, {x: 1.0 for x in self.buffer}), self.level_eps(0))
            self.buffer = []
            i = 0
            while True:
                if i == len(self.levels):
                    self.levels.append(None)
                if self.levels[i] is None:
                    self.levels[i] = carry
                    break
                carry = _reduce(_merge(self.levels[i], carry), self.level_eps(i + 1))
                self.levels[i] = None
                i += 1

    def result(self) -> WeightedGraph:
        out = WeightedGraph(self.n, {x: 1.0 for x in self.buffer})
        for blk in self.levels:
            if blk is not None:
                out = _merge(out, blk)
        return out

    def to_bytes(self) -> bytes:
        parts = [struct.pack("<IdIQ", self.n, self.eps, self.block, self.count)]
        parts.append(struct.pack("<I", len(self.buffer)) + np.array(self.buffer, dtype="<u4").reshape(-1, 2).tobytes())
        for blk in self.levels:
            items = sorted(blk.weights.items()) if blk is not None else []
            parts.append(struct.pack("<i", -1 if blk is None else len(items)))
            for (u, v), w in items:
                parts.append(struct.pack("<IId", u, v, w))
        return b"".join(parts)


def deterministic_sparsify_stream(edges: Iterable[tuple[int, int]], n: int, eps: float, block: Optional[int] = None) -> WeightedGraph:
    sp = StreamingSparsifier(n, eps, block)
    for e in edges:
        sp.push(e)
    return sp.result()


@dataclass
class DeterministicState:
    spanners: SpannerSequence
    sparsifier: StreamingSparsifier
    leftover_count: int = 0
    edge_count: int = 0

    def to_bytes(self) -> bytes:
        return b"".join([
            b"DSDS",
            struct.pack("<QQ", self.edge_count, self.leftover_count),
            self.spanners.to_bytes(),
            self.sparsifier.to_bytes(),
        ])

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


def build_state(events: Sequence[StreamEvent], n: int, eps: float, profile=DESK, block: Optional[int] = None) -> DeterministicState:
    """In-stream phase; a pure function of the events."""
    profile = get_profile(profile)
    seq = SpannerSequence(n, profile.num_spanners(n, eps))
    sp = StreamingSparsifier(n, eps / 5, block)
    state = DeterministicState(seq, sp)
    for pos, ev in enumerate(events):
        if ev.sign < 0:
            raise ValueError(f"event {pos}: deletions are not allowed in insertion-only mode")
        if spanner_insert(seq, ev.pair) == OVERFLOW:
            sp.push(ev.pair)
            state.leftover_count += 1
        state.edge_count += 1
    return state


@dataclass
class InsertionOnlyRun:
    result: ClusteringResult
    state: DeterministicState
    graph: Graph
    provenance: Provenance
    report: dict = field(default_factory=dict)


def post_stream_graph(state: DeterministicState, eps: float, rng, max_iters=None, max_attempts=None) -> tuple[Graph, Provenance, dict]:
    """Solve the offset program over low-resistance pairs and round it."""
    seq = state.spanners
    n = seq.n
    union = seq.union()
    offset = WeightedGraph(n, {e: 1.0 for e in union.edges})
    target = _merge(offset, state.sparsifier.result())
    threshold = seq.stretch / seq.ell
    if n >= 2:
        r = resistance_matrix(union)
        iu, iv = np.nonzero(np.triu(r <= threshold, k=1))
        support = [(int(u), int(v)) for u, v in zip(iu, iv) if (int(u), int(v)) not in union.edges]
    else:
        support = []
    total = state.edge_count - union.m
    prov = Provenance(components=[], fixed_edges=union.m)
    filled = solve_and_round(target, total, program_band(eps / 5), rng, support=support, offset=offset,
                             max_iters=max_iters, max_attempts=max_attempts, prov=prov)
    out = Graph(n, filled.edges | union.edges)
    assert out.m == state.edge_count
    report = {"spanners": seq.ell, "stretch": seq.stretch, "candidate_pairs": len(support), "er_threshold": threshold}
    return out, prov, report


def insertion_only_run(
    events: Sequence[StreamEvent],
    n: int,
    eps: float,
    seed: int,
    backend: str = "pivot",
    profile=DESK,
    rng: Optional[GuardedRng] = None,
    block: Optional[int] = None,
) -> InsertionOnlyRun:
    rng = GuardedRng(seed) if rng is None else rng
    state = build_state(events, n, eps, profile, block)
    rng.release()
    graph, prov, report = post_stream_graph(state, eps, rng)
    report["digest"] = state.digest()
    report["draws_before_end"] = 0
    result = run_backend(graph, backend, seed=seed)
    return InsertionOnlyRun(result, state, graph, prov, report)
