"""Dynamic-stream, distributed and MPC simulations built on the sketch suite.

Each run returns the clustering computed from the model's suite together with
an audit against the suite built offline from the same graph and seed.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..cluster import SketchClustering, cluster_from_sketch
from ..graphcore import Graph, norm_pair
from ..profiles import DESK
from ..sketches import SketchSuite
from .streams import StreamEvent, validate_stream

SEED_BYTES = 8


@dataclass
class ModelRun:
    clustering: SketchClustering
    suite: SketchSuite
    report: dict = field(default_factory=dict)


def _offline_suite(n: int, edges, seed: int, eps: float, lam, profile) -> SketchSuite:
    suite = SketchSuite.new(seed, n, eps, lam=lam, profile=profile)
    suite.update_many(sorted(norm_pair(*e) for e in edges), 1)
    return suite


def _audit(run_suite: SketchSuite, offline: SketchSuite, clustering: SketchClustering, backend: str) -> dict:
    same_bytes = run_suite.to_bytes() == offline.to_bytes()
    offline_clustering = cluster_from_sketch(offline, backend=backend)
    return {
        "suite_equal": same_bytes,
        "partition_equal": offline_clustering.result.partition == clustering.result.partition,
    }


def dynamic_stream_run(
    events: Sequence[StreamEvent],
    n: int,
    eps: float,
    seed: int,
    backend: str = "pivot",
    lam: Optional[float] = None,
    profile=DESK,
    audit: bool = True,
) -> ModelRun:
    """One pass over insertions and deletions, holding only the sketch suite."""
    suite = SketchSuite.new(seed, n, eps, lam=lam, profile=profile)
    net: set[tuple[int, int]] = set()
    for ev in validate_stream(events, n):
        suite.update(ev.u, ev.v, ev.sign)
        if audit:
            (net.add if ev.sign > 0 else net.discard)(ev.pair)
    clustering = cluster_from_sketch(suite, backend=backend)
    report = {"events": len(events), "suite_bytes": len(suite.to_bytes())}
    if audit:
        report.update(_audit(suite, _offline_suite(n, net, seed, eps, lam, profile), clustering, backend))
    return ModelRun(clustering, suite, report)


def _check_disjoint(parts: Sequence[Sequence[tuple[int, int]]]) -> list[list[tuple[int, int]]]:
    seen: dict[tuple[int, int], int] = {}
    out = []
    for i, part in enumerate(parts):
        local = []
        for e in part:
            e = norm_pair(*e)
            if e in seen:
                raise ValueError(f"edge {e} appears on machines {seen[e]} and {i}")
            seen[e] = i
            local.append(e)
        out.append(local)
    return out


def distributed_run(
    partitions: Sequence[Sequence[tuple[int, int]]],
    n: int,
    eps: float,
    seed: int,
    backend: str = "pivot",
    lam: Optional[float] = None,
    profile=DESK,
    audit: bool = True,
) -> ModelRun:
    """Coordinator broadcasts the seed, machines sketch locally, coordinator merges."""
    parts = _check_disjoint(partitions)
    k = len(parts)
    seed_msg = struct.pack("<Q", seed)
    blobs = []
    for local in parts:
        (machine_seed,) = struct.unpack("<Q", seed_msg)
        suite = SketchSuite.new(machine_seed, n, eps, lam=lam, profile=profile)
        suite.update_many(local, 1)
        blobs.append(suite.to_bytes())
    merged = SketchSuite.new(seed, n, eps, lam=lam, profile=profile)
    for blob in blobs:
        merged = merged.merge(SketchSuite.from_bytes(blob))
    clustering = cluster_from_sketch(merged, backend=backend)
    per_machine = [len(seed_msg) + len(b) for b in blobs]
    suite_bytes = len(merged.to_bytes())
    report = {
        "machines": k,
        "per_machine_bytes": per_machine,
        "total": sum(per_machine),
        "bound": k * (suite_bytes + SEED_BYTES),
    }
    assert report["total"] <= report["bound"]
    if audit:
        report.update(_audit(merged, _offline_suite(n, [e for p in parts for e in p], seed, eps, lam, profile), clustering, backend))
    return ModelRun(clustering, merged, report)


class MessageCapExceeded(RuntimeError):
    def __init__(self, machine: int, direction: str, size: int, cap: int):
        super().__init__(f"machine {machine} {direction} {size} bytes, cap {cap}")
        self.machine = machine


_VERTEX_HEADER = struct.Struct("<Iq")


def _pack_vertex(v: int, row: np.ndarray, vec: np.ndarray, count: int) -> bytes:
    return _VERTEX_HEADER.pack(v, count) + row.astype("<i8").tobytes() + vec.astype("<i8").tobytes()


def _unpack_vertex(msg: bytes, template: SketchSuite) -> tuple[int, np.ndarray, np.ndarray, int]:
    v, count = _VERTEX_HEADER.unpack_from(msg, 0)
    row_shape = template.s1.table.shape[1:]
    size = int(np.prod(row_shape))
    row = np.frombuffer(msg, dtype="<i8", count=size, offset=_VERTEX_HEADER.size).reshape(row_shape)
    nvec = template.n - 1 - v
    vec = np.frombuffer(msg, dtype="<i8", count=nvec, offset=_VERTEX_HEADER.size + 8 * size)
    return v, row.astype(np.int64), vec.astype(np.int64), count


def mpc_run(
    machines: Sequence[Sequence[tuple[int, int]]],
    n: int,
    eps: float,
    seed: int,
    backend: str = "pivot",
    lam: Optional[float] = None,
    profile=DESK,
    cap: Optional[int] = None,
    designated: int = 0,
    audit: bool = True,
) -> ModelRun:
    """Two rounds of vertex-incidence aggregation, then recovery on one machine.

    Round 1: each machine sketches its edges and sends, for every touched
    vertex ``v``, that vertex's sub-sketch to the owner ``v mod k``.
    Round 2: owners sum what they received and forward one sub-sketch per
    vertex to the designated machine, which assembles the full suite.
    The cap bounds what one machine sends or receives in a single round.
    """
    parts = _check_disjoint(machines)
    k = len(parts)
    template = SketchSuite.new(seed, n, eps, lam=lam, profile=profile)
    per_vertex = max((template.vertex_slice_bytes(v) for v in range(n)), default=0) + _VERTEX_HEADER.size
    # an owner of ceil(n/k) vertices hears from up to k machines about each
    cap = (n + k) * per_vertex if cap is None else cap
    sent = [[0] * k for _ in range(2)]
    received = [[0] * k for _ in range(2)]
    rounds = 0

    def deliver(src: int, dst: int, msg: bytes, inbox: list) -> None:
        sent[rounds - 1][src] += len(msg)
        received[rounds - 1][dst] += len(msg)
        inbox[dst].append(msg)

    # round 1
    rounds += 1
    inbox: list[list[bytes]] = [[] for _ in range(k)]
    for i, local in enumerate(parts):
        suite = template.empty_like()
        suite.update_many(local, 1)
        touched = sorted({x for e in local for x in e})
        for v in touched:
            deliver(i, v % k, _pack_vertex(v, *suite.vertex_slice(v)), inbox)
    # round 2
    rounds += 1
    inbox2: list[list[bytes]] = [[] for _ in range(k)]
    for owner in range(k):
        agg = template.empty_like()
        mine = set()
        for msg in inbox[owner]:
            v, row, vec, count = _unpack_vertex(msg, template)
            agg.add_vertex_slice(v, row, vec, count)
            mine.add(v)
        for v in sorted(mine):
            deliver(owner, designated, _pack_vertex(v, *agg.vertex_slice(v)), inbox2)
    final = template.empty_like()
    for msg in inbox2[designated]:
        final.add_vertex_slice(*_unpack_vertex(msg, template))
    for rnd in range(2):
        for i in range(k):
            for direction, size in (("sent", sent[rnd][i]), ("received", received[rnd][i])):
                if size > cap:
                    raise MessageCapExceeded(i, f"{direction} in round {rnd + 1}", size, cap)
    assert rounds == 2
    clustering = cluster_from_sketch(final, backend=backend)
    report = {
        "rounds": rounds,
        "machines": k,
        "per_machine_bytes": {"sent": sent, "received": received},
        "messages": sum(len(b) for b in inbox) + sum(len(b) for b in inbox2),
        "cap": cap,
    }
    if audit:
        report.update(_audit(final, _offline_suite(n, [e for p in parts for e in p], seed, eps, lam, profile), clustering, backend))
    return ModelRun(clustering, final, report)
