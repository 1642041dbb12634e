"""Nearest-neighbor averaging of held-out observations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np
from scipy import sparse

from .distance import DistanceMatrix
from .model import ObservationSet


def default_eta(n: int, epsilon: float, psi: float, c_eta: float = 1.0) -> float:
    """Neighbor threshold c_eta * n^-(epsilon - psi)."""
    if not 0.0 < psi < min(epsilon, 3.0 / 8.0):
        raise ValueError(f"psi={psi} must lie in (0, min(epsilon, 3/8))")
    return c_eta * n ** (-(epsilon - psi))


@dataclass
class EstimateResult:
    value: float
    neighbor_count: int
    fallback_used: bool


def _query_mask(mask: np.ndarray, omega3: ObservationSet, u: int, v: int, w: int) -> np.ndarray:
    u, v, w = sorted((u, v, w))
    tr = omega3.triples
    return mask[u, tr[:, 0]] & mask[v, tr[:, 1]] & mask[w, tr[:, 2]]


def neighbor_set(dist: DistanceMatrix, omega3: ObservationSet, u: int, v: int, w: int, eta: float) -> np.ndarray:
    """Triples (a <= b <= c) of omega3 with dist(u,a), dist(v,b), dist(w,c) all valid and < eta.

    The query is sorted first and matched position by position.
    """
    return omega3.triples[_query_mask(dist.neighbor_mask(eta), omega3, u, v, w)]


def _global_mean(omega3: ObservationSet) -> float:
    return float(omega3.values.mean()) if len(omega3) else 0.0


def estimate_entry(dist: DistanceMatrix, omega3: ObservationSet, u: int, v: int, w: int, eta: float) -> EstimateResult:
    sel = _query_mask(dist.neighbor_mask(eta), omega3, u, v, w)
    count = int(np.count_nonzero(sel))
    if count == 0:
        return EstimateResult(_global_mean(omega3), 0, True)
    return EstimateResult(float(omega3.values[sel].mean()), count, False)


@dataclass
class EstimateSlice:
    """Estimates F_hat(u, v, w) for fixed v, all u <= v, all w >= v."""

    v: int
    values: np.ndarray  # shape (v + 1, n - v); rows u = 0..v, columns w = v..n-1
    counts: np.ndarray
    fallback: np.ndarray


class TensorEstimate:
    """Estimated tensor answered on demand or streamed in slices.

    Canonical queries are sorted triples; any ordering is answered by symmetry.
    """

    def __init__(self, dist: DistanceMatrix, omega3: ObservationSet, eta: float):
        self.n = dist.n
        self.eta = eta
        self.omega3 = omega3
        self.mask = dist.neighbor_mask(eta)
        self.global_mean = _global_mean(omega3)
        # per-coordinate neighbor lists {a : dist(u, a) < eta}
        self.neighbors = [np.flatnonzero(row) for row in self.mask]

    def entry(self, u: int, v: int, w: int) -> EstimateResult:
        sel = _query_mask(self.mask, self.omega3, u, v, w)
        count = int(np.count_nonzero(sel))
        if count == 0:
            return EstimateResult(self.global_mean, 0, True)
        return EstimateResult(float(self.omega3.values[sel].mean()), count, False)

    def __call__(self, u: int, v: int, w: int) -> float:
        return self.entry(u, v, w).value

    def slices(self) -> Iterator[EstimateSlice]:
        """Batch evaluation: sum_e val_e A[u,a_e] A[v,b_e] A[w,c_e] as A G_v A^T."""
        n = self.n
        A = self.mask.astype(float)
        tr = self.omega3.triples
        vals = self.omega3.values
        for v in range(n):
            hit = self.mask[v, tr[:, 1]] if len(tr) else np.zeros(0, dtype=bool)
            a, c, x = tr[hit, 0], tr[hit, 2], vals[hit]
            G = sparse.csr_matrix((np.concatenate([x, np.ones_like(x)]), (np.concatenate([a, a + n]), np.concatenate([c, c]))), shape=(2 * n, n))
            left = A[: v + 1]
            # (left @ G_val, left @ G_cnt) stacked, then one product with the w block
            LG = np.vstack([(G[:n].T @ left.T).T, (G[n:].T @ left.T).T])
            out = LG @ A[v:].T
            sums, counts = out[: v + 1], np.rint(out[v + 1 :]).astype(np.int64)
            fallback = counts == 0
            with np.errstate(invalid="ignore", divide="ignore"):
                est = np.where(fallback, self.global_mean, sums / np.maximum(counts, 1))
            yield EstimateSlice(v, est, counts, fallback)

    def dense(self) -> np.ndarray:
        """Full n x n x n array (small n only)."""
        n = self.n
        out = np.empty((n, n, n))
        for sl in self.slices():
            v = sl.v
            for i in range(v + 1):
                for j in range(n - v):
                    u, w = i, v + j
                    val = sl.values[i, j]
                    for a, b, c in ((u, v, w), (u, w, v), (v, u, w), (v, w, u), (w, u, v), (w, v, u)):
                        out[a, b, c] = val
        return out

    def write_csv(self, fh: TextIO) -> None:
        fh.write("u,v,w,estimate,neighbor_count,fallback\n")
        for sl in self.slices():
            v = sl.v
            for i in range(v + 1):
                for j in range(self.n - v):
                    fh.write(f"{i},{v},{v + j},{float(sl.values[i, j])!r},{int(sl.counts[i, j])},{int(sl.fallback[i, j])}\n")


def estimate_all(dist: DistanceMatrix, omega3: ObservationSet, eta: float) -> TensorEstimate:
    return TensorEstimate(dist, omega3, eta)
