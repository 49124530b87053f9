"""Randomized rounding of fractional graphs to simple graphs."""
from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np

from ..graphcore import FractionalGraph, Graph

MAX_ATTEMPTS_CAP = 10**6
_BATCH_CELLS = 1 << 20


class RoundingExhausted(RuntimeError):
    pass


class ExactRounding(NamedTuple):
    graph: Graph
    attempts: int


def round_bernoulli(f: FractionalGraph, rng: np.random.Generator) -> Graph:
    """Keep each support pair independently with probability ``y_e``."""
    keep = rng.random(len(f.support)) < f.y
    return Graph(f.n, frozenset(e for e, k in zip(f.support, keep) if k))


def bernoulli_counts(f: FractionalGraph, rng: np.random.Generator, attempts: int) -> np.ndarray:
    """Kept-edge counts of ``attempts`` independent Bernoulli roundings."""
    d = len(f.support)
    if d == 0:
        return np.zeros(attempts, dtype=np.int64)
    out = np.empty(attempts, dtype=np.int64)
    batch = max(1, _BATCH_CELLS // d)
    for start in range(0, attempts, batch):
        stop = min(attempts, start + batch)
        out[start:stop] = (rng.random((stop - start, d)) < f.y).sum(axis=1)
    return out


def default_max_attempts(n: int) -> int:
    return int(min(max(n, 2) ** 3, MAX_ATTEMPTS_CAP))


def round_exact_weight(
    f: FractionalGraph, target_m: int, rng: np.random.Generator, max_attempts: Optional[int] = None
) -> ExactRounding:
    """Repeat Bernoulli rounding until exactly ``target_m`` edges are kept.

    Attempts are drawn in batches in attempt order, so the first success is
    the same as with one-at-a-time sampling from the same generator stream
    position onward.
    """
    total = f.total_weight()
    if abs(total - target_m) > 1e-9 * max(1.0, abs(target_m)) or int(target_m) != target_m:
        raise ValueError(f"fractional weight {total} does not equal the integer target {target_m}")
    target_m = int(target_m)
    max_attempts = default_max_attempts(f.n) if max_attempts is None else int(max_attempts)
    d = len(f.support)
    if d == 0:
        if target_m == 0:
            return ExactRounding(Graph(f.n, frozenset()), 1)
        raise RoundingExhausted("empty support cannot reach a positive edge count")
    batch = max(1, _BATCH_CELLS // d)
    done = 0
    while done < max_attempts:
        size = min(batch, max_attempts - done)
        keep = rng.random((size, d)) < f.y
        hits = np.flatnonzero(keep.sum(axis=1) == target_m)
        if len(hits):
            row = keep[hits[0]]
            g = Graph(f.n, frozenset(e for e, k in zip(f.support, row) if k))
            return ExactRounding(g, done + int(hits[0]) + 1)
        done += size
    raise RoundingExhausted(f"no attempt hit exactly {target_m} edges in {max_attempts} tries")


def exact_count_probability(y: np.ndarray, k: int) -> float:
    """``P[sum of Bernoulli(y_e) == k]`` by dynamic programming over the pmf."""
    pmf = np.zeros(len(y) + 1)
    pmf[0] = 1.0
    for i, p in enumerate(y):
        pmf[1 : i + 2] = pmf[1 : i + 2] * (1 - p) + pmf[: i + 1] * p
        pmf[0] *= 1 - p
    return float(pmf[k]) if 0 <= k <= len(y) else 0.0
