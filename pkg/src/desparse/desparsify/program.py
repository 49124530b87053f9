"""The fractional total-weight-preserving sparsifier program and its ellipsoid solver.

Variables ``y_e`` live on a list of candidate pairs.  A point is feasible when

* ``0 <= y_e <= 1``,
* ``sum y_e == total_weight``,
* no positive weight joins two components of the target, and
* ``(1-eps) L_H <= L_offset + sum y_e L_e <= (1+eps) L_H``.

The spectral condition is checked in whitened coordinates ``Q`` with
``Q^T L_H Q = I``: with ``q_e = Q[u] - Q[v]`` the matrix
``M(y) = Q^T L_offset Q + sum y_e q_e q_e^T`` must have its spectrum in the band.
An eigenvector ``v`` outside the band gives a linear cut in ``y`` with
coefficients ``(q_e . v)^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from ..graphcore import FractionalGraph, WeightedGraph, component_labels, laplacian, norm_pair
from ..spectral import whitening

WEIGHT_TOL = 1e-9
MIN_RADIUS = 1e-8
TIGHTEN = 0.01  # the solver targets the band eps * (1 - TIGHTEN)


class InfeasibleProgram(RuntimeError):
    def __init__(self, report: "EllipsoidReport"):
        super().__init__(f"program infeasible ({report.stage}): {report.diagnostic}")
        self.report = report


def _empty(n: int) -> WeightedGraph:
    return WeightedGraph(n, {})


@dataclass(frozen=True, eq=False)
class ProgramSpec:
    """Target ``H``, fixed ``offset`` graph, candidate pairs and the weight budget.

    ``total_weight`` is the budget for the ``y`` variables alone; the offset's
    edges are accounted separately.
    """

    n: int
    target: WeightedGraph
    support: tuple
    total_weight: float
    eps: float
    offset: WeightedGraph = None

    def __post_init__(self):
        offset = _empty(self.n) if self.offset is None else self.offset
        if self.target.n != self.n or offset.n != self.n:
            raise ValueError("dimension mismatch")
        support = tuple(norm_pair(int(u), int(v)) for u, v in self.support)
        if len(set(support)) != len(support):
            raise ValueError("duplicate pair in support")
        for u, v in support:
            if u == v or not 0 <= u < self.n or not 0 <= v < self.n:
                raise ValueError(f"invalid pair ({u}, {v})")
        clash = set(support) & set(offset.weights)
        if clash:
            raise ValueError(f"support overlaps offset edges, e.g. {min(clash)}")
        if self.total_weight < 0:
            raise ValueError("total_weight must be non-negative")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "offset", offset)

    @property
    def d(self) -> int:
        return len(self.support)

    def with_eps(self, eps: float) -> "ProgramSpec":
        return ProgramSpec(self.n, self.target, self.support, self.total_weight, eps, self.offset)


@dataclass(frozen=True)
class Ok:
    min_eigenvalue: float
    max_eigenvalue: float

    kind = "ok"


@dataclass(frozen=True, eq=False)
class Violation:
    """A violated constraint, stated as the halfspace ``normal . y <= bound``.

    Every feasible point satisfies it; the queried point does not.
    """

    kind: str  # box | weight | components | spectral_lower | spectral_upper
    normal: Optional[np.ndarray]
    bound: float
    data: dict = field(default_factory=dict)


OracleResult = Union[Ok, Violation]


class _Whitened:
    """Cached whitening of a program's target for repeated oracle calls."""

    def __init__(self, spec: ProgramSpec):
        self.spec = spec
        self.labels = component_labels(spec.target)
        self.q = whitening(laplacian(spec.target))
        sup = np.array(spec.support, dtype=np.int64).reshape(-1, 2)
        self.su, self.sv = sup[:, 0], sup[:, 1]
        self.qe = self.q[self.su] - self.q[self.sv]  # (d, r)
        self.m_off = self.q.T @ laplacian(spec.offset) @ self.q
        self.crossing = self.labels[self.su] != self.labels[self.sv]

    def check(self, y: np.ndarray, eps: float) -> OracleResult:
        spec = self.spec
        d = spec.d
        # (1) box
        if d:
            i = int(np.argmin(y))
            if y[i] < 0:
                a = np.zeros(d)
                a[i] = -1.0
                return Violation("box", a, 0.0, {"pair": spec.support[i], "value": float(y[i])})
            i = int(np.argmax(y))
            if y[i] > 1:
                a = np.zeros(d)
                a[i] = 1.0
                return Violation("box", a, 1.0, {"pair": spec.support[i], "value": float(y[i])})
        # (2) weight
        s = float(y.sum())
        if abs(s - spec.total_weight) > WEIGHT_TOL * max(1.0, spec.total_weight):
            sign = 1.0 if s > spec.total_weight else -1.0
            return Violation("weight", sign * np.ones(d), sign * spec.total_weight, {"sum": s, "target": spec.total_weight})
        # (3) components: no weight may join two target components
        bad = np.flatnonzero(self.crossing & (y > 0))
        if len(bad):
            i = int(bad[np.argmax(y[bad])])
            a = np.zeros(d)
            a[i] = 1.0
            return Violation("components", a, 0.0, {"pair": spec.support[i], "value": float(y[i])})
        # (4) spectral sandwich
        if self.q.shape[1] == 0:
            return Ok(1.0, 1.0)
        mat = self.m_off + (self.qe * y[:, None]).T @ self.qe
        vals, vecs = np.linalg.eigh((mat + mat.T) / 2)
        lo, hi = float(vals[0]), float(vals[-1])
        low_gap, high_gap = (1 - eps) - lo, hi - (1 + eps)
        if low_gap <= 0 and high_gap <= 0:
            return Ok(lo, hi)
        if low_gap >= high_gap:
            v = vecs[:, 0]
            coef = (self.qe @ v) ** 2
            kind, a, b, ev = "spectral_lower", -coef, -(1 - eps) + float(v @ self.m_off @ v), lo
        else:
            v = vecs[:, -1]
            coef = (self.qe @ v) ** 2
            kind, a, b, ev = "spectral_upper", coef, (1 + eps) - float(v @ self.m_off @ v), hi
        z = self.q @ v
        z = z / np.linalg.norm(z)
        return Violation(kind, a, b, {"eigenvalue": ev, "witness": z, "direction": kind.split("_")[1]})


def separation_oracle(spec: ProgramSpec, y: Union[FractionalGraph, np.ndarray], eps: Optional[float] = None) -> OracleResult:
    """Check constraints in the order box, weight, components, spectral.

    ``y`` is either a vector aligned with ``spec.support`` or a
    ``FractionalGraph`` whose support is contained in it.
    """
    eps = spec.eps if eps is None else eps
    return _Whitened(spec).check(_as_vector(spec, y), eps)


def _as_vector(spec: ProgramSpec, y) -> np.ndarray:
    if isinstance(y, FractionalGraph):
        if y.n != spec.n:
            raise ValueError("dimension mismatch")
        pos = {e: i for i, e in enumerate(spec.support)}
        vec = np.zeros(spec.d)
        for e, w in zip(y.support, y.y):
            if e not in pos:
                if w != 0:
                    raise ValueError(f"pair {e} is outside the program support")
                continue
            vec[pos[e]] = w
        return vec
    vec = np.asarray(y, dtype=float)
    if vec.shape != (spec.d,):
        raise ValueError(f"expected a vector of length {spec.d}")
    return vec


@dataclass(frozen=True, eq=False)
class EllipsoidReport:
    feasible: bool
    point: Optional[FractionalGraph]
    iterations: int
    final_volume_log: float
    stage: str = "spectral"  # which check settled the outcome
    diagnostic: str = ""
    oracle_calls: int = 0

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "iterations": self.iterations,
            "final_volume_log": self.final_volume_log,
            "stage": self.stage,
            "diagnostic": self.diagnostic,
            "oracle_calls": self.oracle_calls,
        }


def _point(spec: ProgramSpec, y: np.ndarray) -> FractionalGraph:
    return FractionalGraph(spec.n, spec.support, np.clip(y, 0.0, 1.0))


def ellipsoid_feasibility(spec: ProgramSpec, max_iters: Optional[int] = None, tighten: float = TIGHTEN) -> EllipsoidReport:
    """Deep-cut ellipsoid method inside the hyperplane ``sum y = total_weight``.

    Starts from the ball of radius ``sqrt(d)`` around ``(total/d) * 1``, which
    contains the whole box slice.  Cuts come from the oracle run at the
    tightened band ``eps * (1 - tighten)``; a returned point is re-checked at
    the full band.  Infeasibility is declared once the ellipsoid volume drops
    below that of a ball of radius ``1e-8`` or when a cut misses it entirely.
    """
    labels = component_labels(spec.target)
    off_u = [e for e in spec.offset.weights if labels[e[0]] != labels[e[1]]]
    if off_u:
        return EllipsoidReport(False, None, 0, 0.0, "components", f"offset edge {min(off_u)} joins two target components")
    # pairs joining target components are forced to zero
    keep = [i for i, (u, v) in enumerate(spec.support) if labels[u] == labels[v]]
    inner = ProgramSpec(spec.n, spec.target, tuple(spec.support[i] for i in keep), spec.total_weight, spec.eps, spec.offset)

    def lift(x: np.ndarray) -> np.ndarray:
        y = np.zeros(spec.d)
        y[keep] = x
        return y

    d, total = inner.d, float(inner.total_weight)
    if total > d + WEIGHT_TOL * max(1.0, total):
        return EllipsoidReport(False, None, 0, -np.inf, "components" if d < spec.d else "weight",
                               f"budget {total} exceeds the {d} admissible pairs")
    oracle = _Whitened(inner)
    full_eps = spec.eps
    inner_eps = spec.eps * (1 - tighten)

    # the weight hyperplane meets the box in a single point
    if d == 0 or abs(total) <= WEIGHT_TOL or abs(total - d) <= WEIGHT_TOL * max(1.0, total):
        x = np.zeros(d) if abs(total) <= WEIGHT_TOL else np.ones(d)
        if d == 0 and abs(total) > WEIGHT_TOL:
            return EllipsoidReport(False, None, 0, -np.inf, "weight", "no admissible pairs for a positive budget")
        res = oracle.check(x, full_eps)
        if isinstance(res, Ok):
            return EllipsoidReport(True, _point(spec, lift(x)), 0, -np.inf, "forced", "", 1)
        return EllipsoidReport(False, None, 0, -np.inf, res.kind, _describe(res), 1)

    dim = d - 1  # ellipsoid lives in the hyperplane
    if max_iters is None:
        max_iters = int(50 * d * d * math.log(1 / MIN_RADIUS))
    c = np.full(d, total / d)
    proj = np.eye(d) - 1.0 / d
    a_mat = d * proj  # radius^2 = d
    log_vol = 0.5 * dim * math.log(d)
    floor_log = dim * math.log(MIN_RADIUS)
    calls = 0
    for it in range(1, max_iters + 1):
        res = oracle.check(c, inner_eps)
        calls += 1
        if isinstance(res, Ok):
            final = oracle.check(c, full_eps)
            calls += 1
            if isinstance(final, Ok):
                return EllipsoidReport(True, _point(spec, lift(c)), it, log_vol, "spectral", "", calls)
        if res.kind == "weight":
            # only numerical drift can get here; pull back onto the hyperplane
            c = c + (total - c.sum()) / d
            continue
        a = proj @ res.normal
        ag = a_mat @ a
        s2 = float(a @ ag)
        if s2 <= 1e-300:
            return EllipsoidReport(False, None, it, log_vol, res.kind, "cut is constant on the weight hyperplane: " + _describe(res), calls)
        s = math.sqrt(s2)
        alpha = (float(res.normal @ c) - res.bound) / s
        if alpha >= 1:
            return EllipsoidReport(False, None, it, log_vol, res.kind, "cut misses the ellipsoid: " + _describe(res), calls)
        alpha = max(alpha, 0.0)
        step = ag / s
        if dim == 1:
            c = c - (1 + alpha) / 2 * step
            a_mat = ((1 - alpha) / 2) ** 2 * a_mat
            log_vol += math.log((1 - alpha) / 2)
        else:
            k = dim
            tau = (1 + k * alpha) / (k + 1)
            sigma = 2 * (1 + k * alpha) / ((k + 1) * (1 + alpha))
            delta = k * k * (1 - alpha * alpha) / (k * k - 1)
            c = c - tau * step
            a_mat = delta * (a_mat - sigma * np.outer(step, step))
            log_vol += 0.5 * k * math.log(delta) + 0.5 * math.log(1 - sigma)
        c = c + (total - c.sum()) / d
        if it % 64 == 0:
            a_mat = proj @ a_mat @ proj
            a_mat = (a_mat + a_mat.T) / 2
        if log_vol < floor_log:
            return EllipsoidReport(False, None, it, log_vol, "volume",
                                   f"ellipsoid volume below a radius-{MIN_RADIUS:g} ball", calls)
    return EllipsoidReport(False, None, max_iters, log_vol, "max_iters", f"no feasible point within {max_iters} iterations", calls)


def _describe(res: OracleResult) -> str:
    if isinstance(res, Ok):
        return "ok"
    extra = {k: v for k, v in res.data.items() if k != "witness"}
    return f"{res.kind} {extra}"


def fractional_sparsifier(
    h: WeightedGraph,
    m: float,
    eps: float,
    support: Optional[Sequence[tuple[int, int]]] = None,
    offset: Optional[WeightedGraph] = None,
    max_iters: Optional[int] = None,
) -> tuple[FractionalGraph, EllipsoidReport]:
    """Fractional graph ``y`` with ``offset + y`` a ``(1 +- eps)`` sparsifier of ``h``.

    ``support`` defaults to every pair inside a connected component of ``h``
    (minus the offset's edges).  Raises ``InfeasibleProgram`` otherwise.
    """
    offset = _empty(h.n) if offset is None else offset
    if support is None:
        labels = component_labels(h)
        support = [
            (u, v)
            for u in range(h.n)
            for v in range(u + 1, h.n)
            if labels[u] == labels[v] and (u, v) not in offset.weights
        ]
    spec = ProgramSpec(h.n, h, tuple(support), float(m), eps, offset)
    report = ellipsoid_feasibility(spec, max_iters=max_iters)
    if not report.feasible:
        raise InfeasibleProgram(report)
    # independent re-check of the returned point at the full band
    verdict = separation_oracle(spec, report.point)
    if not isinstance(verdict, Ok):
        raise InfeasibleProgram(EllipsoidReport(False, None, report.iterations, report.final_volume_log,
                                                "recheck", _describe(verdict), report.oracle_calls))
    return report.point, report
