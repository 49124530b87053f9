"""Linear graph sketches: weak-edge recovery, spectral sparsifier, edge count.

Every sketch is a linear function of the signed edge-multiplicity vector
over the ``C(n, 2)`` vertex pairs, so suites can be updated edge by edge,
merged across machines, and have edges subtracted before recovery.

The randomness (sampler hash functions, sampling coins) is a deterministic
function of the seed and is regenerated rather than stored.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from math import ceil, comb, floor, log2
from typing import Iterable, Optional

import numpy as np

from .graphcore import Graph, WeightedGraph, connected_components, norm_pair, pair_index, stoer_wagner
from .profiles import DESK, Profile, get_profile
from .spectral import resistance_matrix

PRIME = (1 << 31) - 1
MAGIC = b"DSPS"
VERSION = 1
_HEADER = struct.Struct("<4sHQIddd")
_S1_HEADER = struct.Struct("<HHHH")

_TAG_S1, _TAG_S2 = 1, 2


class SketchRecoveryError(RuntimeError):
    """Sampler failure during recovery; retry with a fresh seed."""


class SketchMismatchError(ValueError):
    """Suites built with different parameters cannot be combined."""


@lru_cache(maxsize=None)
def _pair_endpoints(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu = np.triu_indices(n, k=1)
    return iu[0].astype(np.int64), iu[1].astype(np.int64)


@lru_cache(maxsize=16)
def _sampler_tables(seed: int, n: int, num_samplers: int, levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Level and fingerprint-power tables shared by every vertex.

    ``level[s, e]``: deepest sampling level pair ``e`` survives to in sampler
    ``s`` (geometric).  ``power[s, e] = r_s^(e+1) mod PRIME``.
    """
    npairs = comb(n, 2)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_TAG_S1, n)))
    u = rng.random((num_samplers, npairs))
    level = np.minimum(np.floor(-np.log2(1.0 - u)), levels - 1).astype(np.int8)
    bases = rng.integers(2, PRIME - 1, size=num_samplers, dtype=np.int64)
    power = np.empty((num_samplers, npairs), dtype=np.int64)
    acc = np.ones(num_samplers, dtype=np.int64)
    for e in range(npairs):
        acc = acc * bases % PRIME
        power[:, e] = acc
    level.setflags(write=False)
    power.setflags(write=False)
    return level, power


@lru_cache(maxsize=16)
def _coin_table(seed: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_TAG_S2, n)))
    coins = rng.random(comb(n, 2))
    coins.setflags(write=False)
    return coins


def _pairs_to_index(n: int, pairs: Iterable[tuple[int, int]]) -> np.ndarray:
    return np.array([pair_index(u, v, n) for u, v in pairs], dtype=np.int64)


class WeakEdgeSketch:
    """Banks of l0-samplers over each vertex's signed incidence vector.

    Layout of ``table``: ``(n, forests * rounds * reps, levels, 3)`` int64 with
    cells ``(sum x, sum x * (e + 1), sum x * r^(e+1) mod PRIME)``.  Bank
    ``f`` extracts one spanning forest by Boruvka, using a fresh group of
    ``reps`` samplers in each of ``rounds`` rounds.
    """

    def __init__(self, seed: int, n: int, lam: float, table: Optional[np.ndarray] = None):
        self.seed = int(seed)
        self.n = int(n)
        self.lam = float(lam)
        self.forests = int(floor(lam)) + 1
        self.rounds = max(1, ceil(log2(max(n, 2)))) + 4
        self.reps = 3
        self.levels = max(1, ceil(log2(max(comb(n, 2), 2)))) + 2
        shape = (self.n, self.num_samplers, self.levels, 3)
        if table is None:
            table = np.zeros(shape, dtype=np.int64)
        elif table.shape != shape:
            raise ValueError(f"table shape {table.shape} does not match {shape}")
        self.table = table

    @property
    def num_samplers(self) -> int:
        return self.forests * self.rounds * self.reps

    @property
    def nbytes(self) -> int:
        return int(self.table.nbytes)

    def _tables(self):
        return _sampler_tables(self.seed, self.n, self.num_samplers, self.levels)

    def copy(self) -> "WeakEdgeSketch":
        return WeakEdgeSketch(self.seed, self.n, self.lam, self.table.copy())

    def contributions(self, idx: np.ndarray, delta: np.ndarray) -> np.ndarray:
        """Per-pair sketch of ``delta * e_pair`` as seen from the smaller endpoint."""
        level, power = self._tables()
        lv = level[:, idx].T  # (m, S)
        mask = np.arange(self.levels)[None, None, :] <= lv[:, :, None]  # (m, S, L)
        d = delta[:, None, None]
        out = np.empty(mask.shape + (3,), dtype=np.int64)
        out[..., 0] = mask * d
        out[..., 1] = mask * (d * (idx[:, None, None] + 1))
        out[..., 2] = mask * ((d % PRIME) * power[:, idx].T[:, :, None] % PRIME)
        return out

    def apply(self, idx: np.ndarray, delta: np.ndarray, table: Optional[np.ndarray] = None) -> None:
        table = self.table if table is None else table
        if len(idx) == 0:
            return
        pu, pv = _pair_endpoints(self.n)
        contrib = self.contributions(idx, delta)
        neg = contrib.copy()
        neg[..., :2] *= -1
        neg[..., 2] = (PRIME - neg[..., 2]) % PRIME
        np.add.at(table, pu[idx], contrib)
        np.add.at(table, pv[idx], neg)
        table[..., 2] %= PRIME

    # -- recovery -----------------------------------------------------------

    def _bank(self, f: int) -> np.ndarray:
        per = self.rounds * self.reps
        return self.table[:, f * per : (f + 1) * per]

    def _decode(self, cells: np.ndarray, sampler_ids: np.ndarray) -> Optional[int]:
        """First one-sparse cell among ``cells`` (reps, L, 3); returns pair index."""
        _, power = self._tables()
        npairs = power.shape[1]
        for r in range(cells.shape[0]):
            for lvl in range(cells.shape[1]):
                cnt, isum, fp = (int(x) for x in cells[r, lvl])
                if cnt == 0 or isum % cnt:
                    continue
                e = isum // cnt - 1
                if not 0 <= e < npairs:
                    continue
                if fp == (cnt % PRIME) * int(power[sampler_ids[r], e]) % PRIME:
                    return e
        return None

    def spanning_forest(self, f: int, minus_idx: np.ndarray, minus_delta: np.ndarray) -> list[tuple[int, int]]:
        """Boruvka on bank ``f`` after subtracting the given pair multiplicities."""
        bank = self._bank(f).copy()
        if len(minus_idx):
            # apply() works on full-width tables; restrict contributions to this bank's samplers
            per = self.rounds * self.reps
            pu, pv = _pair_endpoints(self.n)
            contrib = self.contributions(minus_idx, -minus_delta)[:, f * per : (f + 1) * per]
            neg = contrib.copy()
            neg[..., :2] *= -1
            neg[..., 2] = (PRIME - neg[..., 2]) % PRIME
            np.add.at(bank, pu[minus_idx], contrib)
            np.add.at(bank, pv[minus_idx], neg)
            bank[..., 2] %= PRIME
        pu, pv = _pair_endpoints(self.n)
        parent = list(range(self.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        forest: list[tuple[int, int]] = []
        base = f * self.rounds * self.reps
        done = False
        for rnd in range(self.rounds):
            roots = np.array([find(v) for v in range(self.n)])
            found = []
            active = False
            for root in np.unique(roots):
                members = np.flatnonzero(roots == root)
                block = bank[members, rnd * self.reps : (rnd + 1) * self.reps].sum(axis=0)
                block[..., 2] %= PRIME
                if not block[:, 0].any():
                    continue  # empty boundary at every rep's level 0
                active = True
                ids = np.arange(base + rnd * self.reps, base + (rnd + 1) * self.reps)
                e = self._decode(block, ids)
                if e is not None:
                    found.append(e)
            if not active:
                done = True
                break
            for e in found:
                a, b = int(pu[e]), int(pv[e])
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
                    forest.append((a, b))
        if not done:
            roots = np.array([find(v) for v in range(self.n)])
            for root in np.unique(roots):
                members = np.flatnonzero(roots == root)
                block = bank[members, : self.reps].sum(axis=0)
                block[..., 2] %= PRIME
                if block[:, 0].any():
                    raise SketchRecoveryError(f"spanning forest {f} incomplete after {self.rounds} rounds")
        return forest

    def certificate(self, removed: Iterable[tuple[int, int]] = ()) -> list[list[tuple[int, int]]]:
        """Edge-disjoint maximal forests ``F_1..F_k`` of ``G - removed``."""
        minus = [norm_pair(*e) for e in removed]
        forests = []
        for f in range(self.forests):
            idx = _pairs_to_index(self.n, minus)
            forest = self.spanning_forest(f, idx, np.ones(len(idx), dtype=np.int64))
            forests.append(forest)
            minus.extend(forest)
        return forests


def recover_weak_edges(s1: WeakEdgeSketch, lam: Optional[float] = None) -> frozenset:
    """All edges of strength ``<= lam``, found by certificate-guided peeling.

    Each pass extracts ``floor(lam) + 1`` disjoint forests of the current
    graph; any cut of value ``<= lam`` in that certificate is a cut of the
    same value in the graph, so its edges are removed and the pass repeats
    until every component's minimum cut exceeds ``lam``.
    """
    lam = s1.lam if lam is None else float(lam)
    if floor(lam) + 1 > s1.forests:
        raise ValueError(f"sketch holds {s1.forests} forests, lambda={lam} needs {floor(lam) + 1}")
    removed: set[tuple[int, int]] = set()
    for _ in range(max(1, s1.n)):
        forests = s1.certificate(removed)
        cert = Graph(s1.n, frozenset(e for forest in forests for e in forest))
        adj = cert.adjacency()
        newly = set()
        for comp in connected_components(cert):
            if len(comp) < 2:
                continue
            value, side_local = stoer_wagner(adj[np.ix_(comp, comp)])
            if value <= lam:
                side = {comp[i] for i in side_local}
                newly |= {e for e in cert.edges if (e[0] in side) != (e[1] in side) and e[0] in comp}
        if not newly:
            return frozenset(removed)
        removed |= newly
    raise SketchRecoveryError("weak-edge peeling did not converge")


class SpectralSketch:
    """Exact signed multiplicity vector plus the sampling rate ``phi``.

    Stands in for a hash-compressed spectral sketch: recovery samples each
    edge with probability ``min(1, phi * R_eff(e))`` using a coin that depends
    only on ``(seed, e)``.
    """

    def __init__(self, seed: int, n: int, phi: float, vector: Optional[np.ndarray] = None):
        self.seed = int(seed)
        self.n = int(n)
        self.phi = float(phi)
        self.vector = np.zeros(comb(n, 2), dtype=np.int64) if vector is None else vector

    def copy(self) -> "SpectralSketch":
        return SpectralSketch(self.seed, self.n, self.phi, self.vector.copy())

    @property
    def nbytes(self) -> int:
        return int(self.vector.nbytes)


def recover_spectral(s2: SpectralSketch, exclude: Iterable[tuple[int, int]] = ()) -> WeightedGraph:
    """Effective-resistance sample of the sketched graph minus ``exclude``.

    Edges with ``R_eff >= 1/phi`` are always kept; a kept edge gets weight
    ``1 / p_e``.
    """
    residual = s2.vector.copy()
    ex = _pairs_to_index(s2.n, {norm_pair(*e) for e in exclude})
    if len(ex):
        residual[ex] -= 1
    if residual.size and (residual.min() < 0 or residual.max() > 1):
        raise ValueError("residual multiplicity vector is not 0/1")
    pu, pv = _pair_endpoints(s2.n)
    present = np.flatnonzero(residual)
    g = Graph(s2.n, frozenset(zip(pu[present].tolist(), pv[present].tolist())))
    if not len(present):
        return WeightedGraph(s2.n, {})
    r = resistance_matrix(g)
    coins = _coin_table(s2.seed, s2.n)
    out = {}
    for e in present:
        a, b = int(pu[e]), int(pv[e])
        p = min(1.0, s2.phi * r[a, b])
        if coins[e] < p:
            out[(a, b)] = 1.0 / p
    return WeightedGraph(s2.n, out)


class SketchSuite:
    """The three linear sketches of one graph plus their shared parameters."""

    def __init__(self, seed: int, n: int, eps: float, lam: float, phi: float):
        if n < 1:
            raise ValueError("n must be at least 1")
        if not 0 < eps <= 0.5:
            raise ValueError("eps must lie in (0, 1/2]")
        if lam < 1:
            raise ValueError("lambda must be at least 1")
        self.seed = int(seed) & ((1 << 64) - 1)
        self.n = int(n)
        self.eps = float(eps)
        self.lam = float(lam)
        self.s1 = WeakEdgeSketch(self.seed, self.n, self.lam)
        self.s2 = SpectralSketch(self.seed, self.n, phi)
        self.s3 = 0

    @classmethod
    def new(cls, seed: int, n: int, eps: float, lam: Optional[float] = None, profile: Profile | str = DESK, phi: Optional[float] = None) -> "SketchSuite":
        if not 0 < eps <= 0.5:
            raise ValueError("eps must lie in (0, 1/2]")
        prof = get_profile(profile)
        lam = prof.lam(n, eps) if lam is None else lam
        phi = prof.phi(n, eps) if phi is None else phi
        return cls(seed, n, eps, lam, phi)

    @classmethod
    def of_graph(cls, g: Graph, seed: int, eps: float, **kwargs) -> "SketchSuite":
        suite = cls.new(seed, g.n, eps, **kwargs)
        suite.update_many(g.sorted_edges(), 1)
        return suite

    @property
    def phi(self) -> float:
        return self.s2.phi

    def params(self) -> tuple:
        return (self.seed, self.n, self.eps, self.lam, self.phi)

    def empty_like(self) -> "SketchSuite":
        return SketchSuite(self.seed, self.n, self.eps, self.lam, self.phi)

    def copy(self) -> "SketchSuite":
        out = self.empty_like()
        out.s1.table[...] = self.s1.table
        out.s2.vector[...] = self.s2.vector
        out.s3 = self.s3
        return out

    def update(self, u: int, v: int, sign: int = 1) -> None:
        self.update_many([(u, v)], sign)

    def update_many(self, pairs, sign=1) -> None:
        pairs = [norm_pair(int(a), int(b)) for a, b in pairs]
        for a, b in pairs:
            if b >= self.n:
                raise ValueError(f"vertex {b} out of range")
        if not pairs:
            return
        idx = _pairs_to_index(self.n, pairs)
        delta = np.broadcast_to(np.asarray(sign, dtype=np.int64), idx.shape).copy()
        self.s1.apply(idx, delta)
        np.add.at(self.s2.vector, idx, delta)
        self.s3 += int(delta.sum())

    def merge(self, other: "SketchSuite") -> "SketchSuite":
        if self.params() != other.params():
            raise SketchMismatchError(f"cannot merge suites with parameters {self.params()} and {other.params()}")
        out = self.copy()
        out.s1.table += other.s1.table
        out.s1.table[..., 2] %= PRIME
        out.s2.vector += other.s2.vector
        out.s3 += other.s3
        return out

    def edge_count(self) -> int:
        return int(self.s3)

    # -- serialization ------------------------------------------------------

    def to_bytes(self) -> bytes:
        s1 = self.s1
        parts = [
            _HEADER.pack(MAGIC, VERSION, self.seed, self.n, self.eps, self.lam, self.phi),
            _S1_HEADER.pack(s1.forests, s1.rounds, s1.reps, s1.levels),
            s1.table.astype("<i8").tobytes(),
            self.s2.vector.astype("<i8").tobytes(),
            struct.pack("<q", self.s3),
        ]
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "SketchSuite":
        magic, version, seed, n, eps, lam, phi = _HEADER.unpack_from(blob, 0)
        if magic != MAGIC:
            raise ValueError("not a sketch suite blob")
        if version != VERSION:
            raise ValueError(f"unsupported suite version {version}")
        suite = cls(seed, n, eps, lam, phi)
        off = _HEADER.size
        dims = _S1_HEADER.unpack_from(blob, off)
        s1 = suite.s1
        if dims != (s1.forests, s1.rounds, s1.reps, s1.levels):
            raise ValueError("weak-edge sketch layout mismatch")
        off += _S1_HEADER.size
        size = s1.table.size * 8
        s1.table[...] = np.frombuffer(blob, dtype="<i8", count=s1.table.size, offset=off).reshape(s1.table.shape)
        off += size
        nvec = suite.s2.vector.size
        suite.s2.vector[...] = np.frombuffer(blob, dtype="<i8", count=nvec, offset=off)
        off += nvec * 8
        (suite.s3,) = struct.unpack_from("<q", blob, off)
        if off + 8 != len(blob):
            raise ValueError("trailing bytes in suite blob")
        return suite

    # -- per-vertex view (vertex-incidence form) ----------------------------

    def vertex_slice(self, v: int) -> tuple[np.ndarray, np.ndarray, int]:
        """Sketch of the pairs whose smaller endpoint is ``v`` plus ``v``'s S1 row.

        The S1 row is the l0 bank over ``v``'s incidence vector; the S2 slice
        and edge count cover pairs ``(v, w)`` with ``w > v`` so that summing
        slices over all vertices reproduces the suite.
        """
        start = pair_index(v, v + 1, self.n) if v < self.n - 1 else len(self.s2.vector)
        stop = start + (self.n - 1 - v)
        vec = self.s2.vector[start:stop]
        return self.s1.table[v], vec, int(vec.sum())

    def vertex_slice_bytes(self, v: int) -> int:
        row, vec, _ = self.vertex_slice(v)
        return int(row.nbytes + vec.nbytes + 8)

    def add_vertex_slice(self, v: int, row: np.ndarray, vec: np.ndarray, count: int) -> None:
        self.s1.table[v] += row
        self.s1.table[v, ..., 2] %= PRIME
        if len(vec):
            start = pair_index(v, v + 1, self.n)
            self.s2.vector[start : start + len(vec)] += vec
        self.s3 += count

    def __eq__(self, other):
        return isinstance(other, SketchSuite) and self.to_bytes() == other.to_bytes()

    __hash__ = None
