"""Pseudo-inverses, effective resistances and sparsifier verification."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .graphcore import AnyGraph, Graph, WeightedGraph, component_labels, laplacian

NULL_THRESHOLD = 1e-8  # relative to the largest eigenvalue
VERDICT_SLACK = 1e-6
MAX_BRUTEFORCE_N = 24


def _check_symmetric_psd(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.abs(mat).max()) if mat.size else 1.0)
    if not np.allclose(mat, mat.T, atol=1e-10 * scale, rtol=0):
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2)
    top = float(vals.max()) if vals.size else 0.0
    if vals.size and vals.min() < -NULL_THRESHOLD * max(top, 1.0):
        raise ValueError(f"matrix has negative eigenvalue {vals.min():.3g}")
    return vals, vecs, top


def range_basis(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a PSD matrix restricted to its image."""
    vals, vecs, top = _check_symmetric_psd(mat)
    keep = vals > NULL_THRESHOLD * top if top > 0 else np.zeros(vals.shape, dtype=bool)
    return vals[keep], vecs[:, keep]


def pinv_sqrt(mat: np.ndarray) -> np.ndarray:
    """Square root of the Moore-Penrose pseudo-inverse of a PSD matrix.

    Eigenvalues below ``1e-8`` times the largest one are treated as kernel.
    """
    vals, vecs = range_basis(mat)
    return (vecs / np.sqrt(vals)) @ vecs.T


def pinv(mat: np.ndarray) -> np.ndarray:
    vals, vecs = range_basis(mat)
    return (vecs / vals) @ vecs.T


def whitening(mat: np.ndarray) -> np.ndarray:
    """``Q`` (n x r) with ``Q.T @ mat @ Q = I_r`` spanning the image of ``mat``.

    ``Q @ Q.T`` equals the pseudo-inverse; ``Q.T @ X @ Q`` is the restriction
    of ``pinv_sqrt(mat) @ X @ pinv_sqrt(mat)`` to the image, in eigen-coordinates.
    """
    vals, vecs = range_basis(mat)
    return vecs / np.sqrt(vals)


def resistance_matrix(g: AnyGraph) -> np.ndarray:
    """All-pairs effective resistance; ``inf`` between different components."""
    lp = pinv(laplacian(g))
    d = np.diag(lp)
    r = d[:, None] + d[None, :] - 2 * lp
    np.fill_diagonal(r, 0.0)
    r = np.maximum(r, 0.0)
    labels = component_labels(g)
    r[labels[:, None] != labels[None, :]] = np.inf
    return r


def effective_resistance(g: AnyGraph, u: int, v: int) -> float:
    """``(e_u - e_v)^T L^+ (e_u - e_v)``; ``inf`` when u and v are disconnected."""
    for x in (u, v):
        if not 0 <= x < g.n:
            raise ValueError(f"vertex {x} out of range")
    if u == v:
        return 0.0
    labels = component_labels(g)
    if labels[u] != labels[v]:
        return float("inf")
    chi = np.zeros(g.n)
    chi[u], chi[v] = 1.0, -1.0
    return float(chi @ pinv(laplacian(g)) @ chi)


@dataclass(frozen=True, eq=False)
class SpectralVerdict:
    ok: bool
    extreme_eigenvalue: float
    witness: Optional[np.ndarray] = None
    min_eigenvalue: float = 1.0
    max_eigenvalue: float = 1.0
    reason: str = "spectral"

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "reason": self.reason,
            "extreme_eigenvalue": self.extreme_eigenvalue,
            "min_eigenvalue": self.min_eigenvalue,
            "max_eigenvalue": self.max_eigenvalue,
        }


def _component_witness(g_labels: np.ndarray, h_labels: np.ndarray) -> tuple[np.ndarray, float]:
    n = len(g_labels)
    for c in np.unique(g_labels):
        members = g_labels == c
        inside = np.unique(h_labels[members])
        if len(inside) > 1:
            # h is disconnected inside a component of g
            z = np.where(members & (h_labels == inside[0]), 1.0, 0.0)
            z[members] -= z[members].mean()
            return z / np.linalg.norm(z), 0.0
    for c in np.unique(h_labels):
        members = h_labels == c
        if len(np.unique(g_labels[members])) > 1:
            # h joins vertices that g keeps apart
            z = np.where(members & (g_labels == g_labels[members][0]), 1.0, 0.0)
            return z / np.linalg.norm(z), float("inf")
    return np.ones(n) / np.sqrt(n), 1.0


def spectral_ratio_eigs(h_lap: np.ndarray, g_lap: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigen-decomposition of ``L_g^{+/2} L_h L_g^{+/2}`` on the image of ``L_g``.

    Returns ``(eigenvalues, eigenvectors in image coordinates, Q)``.
    """
    q = whitening(g_lap)
    m = q.T @ h_lap @ q
    vals, vecs = np.linalg.eigh((m + m.T) / 2)
    return vals, vecs, q


def is_spectral_sparsifier(h: AnyGraph, g: AnyGraph, eps: float, slack: float = VERDICT_SLACK) -> SpectralVerdict:
    """Check ``(1-eps) L_g <= L_h <= (1+eps) L_g`` via the whitened eigenvalues."""
    if h.n != g.n:
        raise ValueError("dimension mismatch")
    g_labels, h_labels = component_labels(g), component_labels(h)
    same = len(np.unique(g_labels)) == len(np.unique(h_labels)) and np.array_equal(
        g_labels[:, None] == g_labels[None, :], h_labels[:, None] == h_labels[None, :]
    )
    if not same:
        z, lam = _component_witness(g_labels, h_labels)
        return SpectralVerdict(False, lam, z, min(lam, 1.0), max(lam, 1.0), reason="components")
    lg = laplacian(g)
    if not lg.any():
        return SpectralVerdict(True, 1.0)
    vals, vecs, q = spectral_ratio_eigs(laplacian(h), lg)
    lo, hi = float(vals.min()), float(vals.max())
    ok = lo >= (1 - eps) * (1 - slack) and hi <= (1 + eps) * (1 + slack)
    # whichever end strays farthest outside the band
    if (1 - eps) - lo >= hi - (1 + eps):
        idx, extreme = 0, lo
    else:
        idx, extreme = len(vals) - 1, hi
    witness = None
    if not ok:
        z = q @ vecs[:, idx]
        witness = z / np.linalg.norm(z)
    return SpectralVerdict(ok, extreme, witness, lo, hi)


def cut_masks(n: int, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    """Bitmasks of the nontrivial cuts with vertex ``n-1`` on the outside."""
    stop = (1 << (n - 1)) if stop is None else stop
    return np.arange(max(start, 1), stop, dtype=np.int64)


def iter_cut_values(ws: list[np.ndarray], chunk: int = 1 << 17) -> Iterator[tuple[np.ndarray, list[np.ndarray]]]:
    """Yield ``(masks, [cut values under each weight matrix])`` over all cuts.

    Every nontrivial cut appears exactly once (vertex ``n-1`` never in S).
    """
    n = ws[0].shape[0]
    if n > MAX_BRUTEFORCE_N:
        raise ValueError(f"n={n} too large for exhaustive cut enumeration")
    if n < 2:
        return
    bits = np.arange(n - 1, dtype=np.int64)
    total = 1 << (n - 1)
    for start in range(1, total, chunk):
        masks = np.arange(start, min(total, start + chunk), dtype=np.int64)
        x = np.zeros((len(masks), n))
        x[:, : n - 1] = (masks[:, None] >> bits) & 1
        outs = [((x @ w) * (1.0 - x)).sum(axis=1) for w in ws]
        yield masks, outs


def mask_to_set(mask: int, n: int) -> frozenset:
    return frozenset(v for v in range(n) if (mask >> v) & 1)


@dataclass(frozen=True)
class CutVerdict:
    ok: bool
    witness: Optional[frozenset] = None
    h_value: float = 0.0
    g_value: float = 0.0
    worst_ratio_low: float = 1.0
    worst_ratio_high: float = 1.0

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "witness": sorted(self.witness) if self.witness is not None else None,
            "worst_ratio_low": self.worst_ratio_low,
            "worst_ratio_high": self.worst_ratio_high,
        }


def is_cut_sparsifier_bruteforce(h: AnyGraph, g: AnyGraph, eps: float, slack: float = VERDICT_SLACK) -> CutVerdict:
    """Enumerate all ``2^(n-1) - 1`` cuts and check the ``(1 +- eps)`` band."""
    if h.n != g.n:
        raise ValueError("dimension mismatch")
    n = g.n
    if n > MAX_BRUTEFORCE_N:
        raise ValueError(f"n={n} exceeds the enumeration limit {MAX_BRUTEFORCE_N}")
    wh, wg = h.adjacency(), g.adjacency()
    lo_ratio, hi_ratio = np.inf, 0.0
    worst = None
    worst_gap = 0.0
    for masks, (ch, cg) in iter_cut_values([wh, wg]):
        lower = (1 - eps) * cg * (1 - slack) - 1e-9
        upper = (1 + eps) * cg * (1 + slack) + 1e-9
        bad = (ch < lower) | (ch > upper)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(cg > 0, ch / np.where(cg > 0, cg, 1.0), np.where(ch > 0, np.inf, 1.0))
        lo_ratio = min(lo_ratio, float(ratio.min()))
        hi_ratio = max(hi_ratio, float(ratio.max()))
        if bad.any():
            gap = np.maximum(lower - ch, ch - upper)
            i = int(np.argmax(np.where(bad, gap, -np.inf)))
            if worst is None or gap[i] > worst_gap:
                worst_gap = float(gap[i])
                worst = (int(masks[i]), float(ch[i]), float(cg[i]))
    if n < 2:
        lo_ratio = hi_ratio = 1.0
    if worst is None:
        return CutVerdict(True, None, 0.0, 0.0, lo_ratio, hi_ratio)
    mask, chv, cgv = worst
    return CutVerdict(False, mask_to_set(mask, n), chv, cgv, lo_ratio, hi_ratio)


def is_total_weight_preserving(h: AnyGraph, g: AnyGraph, tol: float = 1e-9) -> bool:
    th = float(h.m) if isinstance(h, Graph) else h.total_weight()
    tg = float(g.m) if isinstance(g, Graph) else g.total_weight()
    return abs(th - tg) <= tol * max(1.0, tg)


def effective_resistance_sample(g: AnyGraph, eps: float, const: float, rng: np.random.Generator) -> WeightedGraph:
    """Effective-resistance sampling with ``p_e = min(1, const * ln(n) * w_e * R_e / eps^2)``."""
    r = resistance_matrix(g)
    n = g.n
    items = [(e, 1.0) for e in sorted(g.edges)] if isinstance(g, Graph) else list(g.weights.items())
    out = {}
    scale = const * np.log(max(n, 2)) / eps**2
    for (u, v), w in items:
        p = min(1.0, scale * w * r[u, v])
        if rng.random() < p:
            out[(u, v)] = w / p
    return WeightedGraph(n, out)
