"""Thresholded quadratic-form distances between coordinates.

For a pair (u, v) with depth-t BFS vectors N_u, N_v, and a column (alpha, beta)
of the flattening over the second coordinate half,

    T_uv(alpha, beta) = sum_{a != b} N_u(a) N_v(b) M(a, alpha, beta) M(b, alpha, beta)

is zeroed when |T| >= phi^2, summed over the pairs whose coordinates neither
tree touched, and normalized by |pairs| p^2 |S_u| |S_v| to give Z_uv. The
distance is Z_uu + Z_vv - Z_uv - Z_vu over the pair set shared by u and v.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import TextIO

import numpy as np
from scipy import sparse

from .bfs import BfsTree, build_all_trees
from .errors import DenseRegimeError, EmptyLayerError
from .graph import BipartiteGraph
from .model import LatentModel, ObservationSet


def threshold_phi(n: int, p: float) -> int:
    """Clipping level phi = ceil(2 ln n / ln(1 / (p n)))."""
    if p * n >= 1.0:
        raise DenseRegimeError(f"p n = {p * n:.4g} >= 1: clipping threshold undefined")
    return math.ceil(round(2.0 * math.log(n) / math.log(1.0 / (p * n)), 9))


def clip_T(T: float, phi: float | None) -> float:
    if phi is None:
        return T
    return T if abs(T) < phi * phi else 0.0


# ---------------------------------------------------------------------------
# the flattening restricted to columns over the second coordinate half


@dataclass
class ColumnIndex:
    n: int
    set_b: np.ndarray
    pairs: list[tuple[int, int]]
    alpha: np.ndarray
    beta: np.ndarray
    row_cols: list[np.ndarray]  # coordinate -> column ids (ascending)
    row_vals: list[np.ndarray]
    pair_index: dict[tuple[int, int], int]
    _by_column: dict | None = field(default=None, repr=False)

    def column(self, alpha: int, beta: int) -> dict[int, float]:
        """{a: M(a, alpha, beta)} over observed rows of column (alpha, beta)."""
        cid = self.pair_index.get((alpha, beta))
        if cid is None:
            return {}
        if self._by_column is None:
            by_col: dict[int, dict[int, float]] = {}
            for a in range(self.n):
                for c, w in zip(self.row_cols[a].tolist(), self.row_vals[a].tolist()):
                    by_col.setdefault(c, {})[a] = w
            self._by_column = by_col
        return dict(self._by_column.get(cid, {}))


def build_column_index(omega1: ObservationSet, set_b) -> ColumnIndex:
    n = omega1.n
    domain = sorted(int(x) for x in set_b)
    in_domain = np.zeros(n, dtype=bool)
    in_domain[domain] = True
    pairs = list(combinations(domain, 2))
    pair_index = {pc: i for i, pc in enumerate(pairs)}
    rows: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (x, y, z), w in zip(omega1.triples.tolist(), omega1.values.tolist()):
        for a, b, c in ((x, y, z), (y, x, z), (z, x, y)):
            if b < c and a != b and a != c and in_domain[b] and in_domain[c]:
                rows[a].append((pair_index[(b, c)], w))
    row_cols, row_vals = [], []
    for r in rows:
        r.sort()
        row_cols.append(np.array([c for c, _ in r], dtype=np.int64))
        row_vals.append(np.array([w for _, w in r], dtype=float))
    arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    return ColumnIndex(n, np.array(domain, dtype=np.int64), pairs, arr[:, 0], arr[:, 1], row_cols, row_vals, pair_index)


# ---------------------------------------------------------------------------
# per-pair operations


def restricted_pair_set(u_tree: BfsTree, v_tree: BfsTree, set_b) -> list[tuple[int, int]]:
    touched = u_tree.visited | v_tree.visited
    free = sorted(int(x) for x in set_b if int(x) not in touched)
    return list(combinations(free, 2))


def compute_T(N_u: dict[int, float], N_v: dict[int, float], column: dict[int, float]) -> float:
    """Sum over a != b of N_u(a) N_v(b) x_a x_b, in product form."""
    su = sv = diag = 0.0
    for a, x in column.items():
        nu = N_u.get(a, 0.0)
        nv = N_v.get(a, 0.0)
        su += nu * x
        sv += nv * x
        diag += nu * nv * x * x
    return su * sv - diag


def compute_Z(
    u_tree: BfsTree,
    v_tree: BfsTree,
    columns: ColumnIndex,
    pair_set,
    p_eff: float,
    phi: float | None = None,
    n_pairs: int | None = None,
) -> float:
    """Normalized clipped sum of T over ``pair_set``.

    ``n_pairs`` overrides the normalizing pair count; pass it when
    ``pair_set`` lists only the columns that can be nonzero.
    """
    Su, Sv = u_tree.S_layers[u_tree.t], v_tree.S_layers[v_tree.t]
    if not Su or not Sv:
        raise EmptyLayerError("depth-t layer is empty")
    n_pairs = len(pair_set) if n_pairs is None else n_pairs
    if n_pairs == 0:
        raise EmptyLayerError("restricted pair set is empty")
    Nu, Nv = u_tree.N_vectors[u_tree.t], v_tree.N_vectors[v_tree.t]
    total = 0.0
    for alpha, beta in pair_set:
        col = columns.column(alpha, beta)
        if col:
            total += clip_T(compute_T(Nu, Nv, col), phi)
    return total / (n_pairs * p_eff * p_eff * len(Su) * len(Sv))


def _candidate_columns(trees: list[BfsTree], columns: ColumnIndex, touched) -> list[tuple[int, int]]:
    cids = set()
    for tree in trees:
        for a in tree.S_layers[tree.t]:
            cids.update(columns.row_cols[a].tolist())
    out = []
    for cid in sorted(cids):
        al, be = columns.pairs[cid]
        if al not in touched and be not in touched:
            out.append((al, be))
    return out


def estimate_distance(
    u: int,
    v: int,
    trees: list[BfsTree],
    columns: ColumnIndex,
    p_eff: float,
    phi: float | None = None,
) -> tuple[float, bool]:
    """(dist(u, v), valid). Invalid when a depth-t layer or the pair set is empty."""
    tu, tv = trees[u], trees[v]
    if tu.stalled or tv.stalled:
        return math.nan, False
    if u == v:
        return 0.0, True
    touched = tu.visited | tv.visited
    free = sum(1 for x in columns.set_b.tolist() if x not in touched)
    n_pairs = free * (free - 1) // 2
    if n_pairs == 0:
        return math.nan, False
    cand = _candidate_columns([tu, tv], columns, touched)
    z = {}
    for a, b in ((u, u), (v, v), (u, v), (v, u)):
        z[a, b] = compute_Z(trees[a], trees[b], columns, cand, p_eff, phi, n_pairs=n_pairs)
    return z[u, u] + z[v, v] - z[u, v] - z[v, u], True


# ---------------------------------------------------------------------------
# all pairs


@dataclass
class DistanceMatrix:
    n: int
    values: np.ndarray  # NaN where invalid
    valid: np.ndarray
    t: int
    phi: float | None

    def neighbor_mask(self, eta: float) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return self.valid & (self.values < eta)

    def valid_pair_fraction(self) -> float:
        off = ~np.eye(self.n, dtype=bool)
        return float(self.valid[off].mean()) if self.n > 1 else 1.0

    def write_csv(self, fh: TextIO) -> None:
        fh.write("u,v,distance,valid\n")
        for u in range(self.n):
            for v in range(u, self.n):
                val = self.values[u, v]
                fh.write(f"{u},{v},{'' if np.isnan(val) else repr(float(val))},{int(self.valid[u, v])}\n")


class _TreeSummary:
    """Column-aggregated view of one tree's depth-t vector."""

    __slots__ = ("size", "S", "N", "cols", "x", "d", "alpha", "beta", "touched")

    def __init__(self, tree: BfsTree, columns: ColumnIndex, n: int):
        S = tree.S_layers[tree.t]
        Nt = tree.N_vectors[tree.t]
        self.size = len(S)
        self.S = np.array(S, dtype=np.int64)
        self.N = np.array([Nt[a] for a in S], dtype=float)
        parts_c = [columns.row_cols[a] for a in S]
        parts_v = [columns.row_vals[a] for a in S]
        weights = [np.full(len(c), Nt[a]) for a, c in zip(S, parts_c)]
        if parts_c and sum(len(c) for c in parts_c):
            c = np.concatenate(parts_c)
            m = np.concatenate(parts_v)
            w = np.concatenate(weights)
            self.cols, inv = np.unique(c, return_inverse=True)
            self.x = np.bincount(inv, weights=w * m, minlength=len(self.cols))
            self.d = np.bincount(inv, weights=(w * m) ** 2, minlength=len(self.cols))
        else:
            self.cols = np.zeros(0, dtype=np.int64)
            self.x = np.zeros(0)
            self.d = np.zeros(0)
        self.alpha = columns.alpha[self.cols]
        self.beta = columns.beta[self.cols]
        self.touched = np.zeros(n, dtype=bool)
        self.touched[list(tree.visited)] = True


def _clip(T: np.ndarray, phi: float | None) -> np.ndarray:
    if phi is None:
        return T
    return np.where(np.abs(T) < phi * phi, T, 0.0)


def _pair_distance(su: _TreeSummary, sv: _TreeSummary, columns: ColumnIndex, in_b, p2, phi) -> float:
    excl = su.touched | sv.touched
    free = int(np.count_nonzero(in_b & ~excl))
    n_pairs = free * (free - 1) // 2
    if n_pairs == 0:
        return math.nan

    def self_term(s: _TreeSummary) -> float:
        keep = ~(excl[s.alpha] | excl[s.beta])
        T = _clip(s.x[keep] ** 2 - s.d[keep], phi)
        return float(T.sum()) / (n_pairs * p2 * s.size * s.size)

    cols, iu, iv = np.intersect1d(su.cols, sv.cols, assume_unique=True, return_indices=True)
    T = su.x[iu] * sv.x[iv]
    common = np.intersect1d(su.S, sv.S, assume_unique=True)
    if len(common) and len(cols):
        Nu = dict(zip(su.S.tolist(), su.N.tolist()))
        Nv = dict(zip(sv.S.tolist(), sv.N.tolist()))
        diag = np.zeros(len(cols))
        for a in common.tolist():
            pos = np.searchsorted(cols, columns.row_cols[a])
            diag[pos] += Nu[a] * Nv[a] * columns.row_vals[a] ** 2
        T = T - diag
    keep = ~(excl[columns.alpha[cols]] | excl[columns.beta[cols]])
    z_uv = float(_clip(T[keep], phi).sum()) / (n_pairs * p2 * su.size * sv.size)
    # T is symmetric in (u, v), so Z_vu == Z_uv
    return self_term(su) + self_term(sv) - 2.0 * z_uv


def distances_from_trees(
    trees: list[BfsTree], columns: ColumnIndex, p_eff: float, phi: float | None, t: int
) -> DistanceMatrix:
    n = columns.n
    values = np.full((n, n), np.nan)
    valid = np.zeros((n, n), dtype=bool)
    in_b = np.zeros(n, dtype=bool)
    in_b[columns.set_b] = True
    live = [u for u in range(n) if not trees[u].stalled]
    summaries = {u: _TreeSummary(trees[u], columns, n) for u in live}
    p2 = p_eff * p_eff
    for u in live:
        values[u, u] = 0.0
        valid[u, u] = True
    for i, u in enumerate(live):
        su = summaries[u]
        for v in live[i + 1 :]:
            d = _pair_distance(su, summaries[v], columns, in_b, p2, phi)
            if not math.isnan(d):
                values[u, v] = values[v, u] = d
                valid[u, v] = valid[v, u] = True
    return DistanceMatrix(n, values, valid, t, phi)


def all_pairs_distances(
    graph: BipartiteGraph,
    omega1: ObservationSet,
    n: int,
    p: float,
    t: int,
    seed: int,
    set_b=None,
    p_eff: float | None = None,
    trees: list[BfsTree] | None = None,
) -> DistanceMatrix:
    """Distances for every coordinate pair.

    ``p`` sets the clipping level (clipping is off when p n >= 1); ``p_eff``,
    the density of ``omega1``, normalizes Z and defaults to ``omega1.p``.
    """
    if set_b is None:
        set_b = np.arange(n // 2, n)
    try:
        phi = threshold_phi(n, p)
    except DenseRegimeError:
        phi = None
    if trees is None:
        trees = build_all_trees(graph, t, seed)
    columns = build_column_index(omega1, set_b)
    return distances_from_trees(trees, columns, omega1.p if p_eff is None else p_eff, phi, t)


# ---------------------------------------------------------------------------
# latent-variable oracle and the naive shared-column baseline


def oracle_distance(model: LatentModel, t: int, u: int, v: int, exponent: int | None = None) -> float:
    """sum_k lambda_k^(2m) (q_k(theta_u) - q_k(theta_v))^2 with m = 2t + 1 by default."""
    m = 2 * t + 1 if exponent is None else exponent
    Q = model.features()
    lam = model.eigenvalues
    return float(np.sum(lam ** (2 * m) * (Q[:, u] - Q[:, v]) ** 2))


def oracle_distance_matrix(model: LatentModel, t: int, exponent: int | None = None) -> np.ndarray:
    m = 2 * t + 1 if exponent is None else exponent
    Q = model.features()
    w = model.eigenvalues ** (2 * m)
    diff = Q[:, :, None] - Q[:, None, :]
    return np.einsum("k,kuv->uv", w, diff**2)


def _naive_rows(omega: ObservationSet) -> dict[tuple[int, int], float]:
    n = omega.n
    cells = {}
    for (x, y, z), w in zip(omega.triples.tolist(), omega.values.tolist()):
        for a, b, c in ((x, y, z), (y, x, z), (z, x, y)):
            cells[a, b * n + c] = w
    return cells


def naive_distance(u: int, v: int, omega: ObservationSet, sigma_hat: float = 0.0) -> tuple[float, int]:
    """Mean squared difference of rows u and v over shared observed columns (b <= c).

    Subtracting 2 sigma_hat^2 removes the noise offset; off by default.
    Returns (nan, 0) when the rows share no column.
    """
    cells = _naive_rows(omega)
    row_u = {c: w for (a, c), w in cells.items() if a == u}
    row_v = {c: w for (a, c), w in cells.items() if a == v}
    shared = row_u.keys() & row_v.keys()
    if not shared:
        return math.nan, 0
    mean = sum((row_u[c] - row_v[c]) ** 2 for c in shared) / len(shared)
    return mean - 2.0 * sigma_hat**2, len(shared)


def naive_distance_matrix(omega: ObservationSet, sigma_hat: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """All-pairs naive distances and shared-column counts via sparse products."""
    n = omega.n
    cells = _naive_rows(omega)
    if not cells:
        return np.full((n, n), np.nan), np.zeros((n, n), dtype=np.int64)
    keys = np.array(list(cells.keys()), dtype=np.int64)
    vals = np.array(list(cells.values()), dtype=float)
    shape = (n, n * n)
    R = sparse.csr_matrix((vals, (keys[:, 0], keys[:, 1])), shape=shape)
    R1 = sparse.csr_matrix((np.ones_like(vals), (keys[:, 0], keys[:, 1])), shape=shape)
    R2 = sparse.csr_matrix((vals**2, (keys[:, 0], keys[:, 1])), shape=shape)
    counts = (R1 @ R1.T).toarray().round().astype(np.int64)
    sq = (R2 @ R1.T).toarray()
    sumsq = sq + sq.T - 2.0 * (R @ R.T).toarray()
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.where(counts > 0, sumsq / np.maximum(counts, 1) - 2.0 * sigma_hat**2, np.nan)
    return d, counts
