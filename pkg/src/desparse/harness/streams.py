"""Edge streams: events, validation and the text file format.

File format: an optional header ``n <count>`` followed by one event per line,
``u v +`` for an insertion and ``u v -`` for a deletion (a Unicode minus is
accepted too).  Blank lines and ``#`` comments are skipped.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from ..graphcore import Graph, norm_pair


class InvalidStreamError(ValueError):
    def __init__(self, position: int, message: str):
        super().__init__(f"event {position}: {message}")
        self.position = position


@dataclass(frozen=True)
class StreamEvent:
    u: int
    v: int
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def pair(self) -> tuple[int, int]:
        return norm_pair(self.u, self.v)


def validate_stream(events: Iterable[StreamEvent], n: int) -> Iterator[StreamEvent]:
    """Yield events while checking that multiplicities stay 0/1."""
    present: set[tuple[int, int]] = set()
    for i, ev in enumerate(events):
        if ev.u == ev.v:
            raise InvalidStreamError(i, f"self-loop at vertex {ev.u}")
        if not (0 <= ev.u < n and 0 <= ev.v < n):
            raise InvalidStreamError(i, f"vertex out of range in ({ev.u}, {ev.v})")
        e = ev.pair
        if ev.sign > 0:
            if e in present:
                raise InvalidStreamError(i, f"edge {e} inserted twice")
            present.add(e)
        else:
            if e not in present:
                raise InvalidStreamError(i, f"edge {e} deleted while absent")
            present.discard(e)
        yield ev


def net_graph(events: Sequence[StreamEvent], n: int) -> Graph:
    present: set[tuple[int, int]] = set()
    for ev in validate_stream(events, n):
        (present.add if ev.sign > 0 else present.discard)(ev.pair)
    return Graph(n, frozenset(present))


def insert_stream(g: Graph, order: Optional[Sequence[int]] = None) -> list[StreamEvent]:
    edges = g.sorted_edges()
    if order is not None:
        edges = [edges[i] for i in order]
    return [StreamEvent(u, v, 1) for u, v in edges]


def read_stream(path) -> tuple[int, list[StreamEvent]]:
    n = None
    events = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "n" and len(parts) == 2:
                n = int(parts[1])
                continue
            if len(parts) != 3 or parts[2] not in ("+", "-", "−"):
                raise ValueError(f"bad stream line {line!r}")
            events.append(StreamEvent(int(parts[0]), int(parts[1]), 1 if parts[2] == "+" else -1))
    if n is None:
        n = 1 + max((max(ev.u, ev.v) for ev in events), default=-1)
    return n, events


def write_stream(path, n: int, events: Iterable[StreamEvent]) -> None:
    with open(path, "w") as fh:
        fh.write(f"n {n}\n")
        for ev in events:
            fh.write(f"{ev.u} {ev.v} {'+' if ev.sign > 0 else '-'}\n")
