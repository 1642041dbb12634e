"""Coordinate-constrained BFS trees and their path-product neighborhood vectors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from ._seeding import derive_rng
from .errors import BelowThresholdError, EmptyLayerError
from .graph import BipartiteGraph


def radius(n: int, p: float) -> int:
    """BFS depth t = ceil(ln n / (2 ln(p^2 n^3)))."""
    x = p * p * n**3
    if x <= 1.0:
        raise BelowThresholdError(f"p^2 n^3 = {x:.4g} <= 1: below the connectivity threshold")
    # round first: exact integers like 1/(4 eps) = 1 must not ceil to 2
    return max(1, math.ceil(round(math.log(n) / (2.0 * math.log(x)), 9)))


@dataclass
class BfsTree:
    root: int
    t: int
    # index s = 0..t; S_layers[0] == [root], U_layers[0] == []
    S_layers: list[list[int]]
    U_layers: list[list[int]]  # pair-vertex ids
    coord_parent: dict[int, int]  # coordinate -> parent pair id
    pair_parent: dict[int, int]  # pair id -> parent coordinate
    N_vectors: list[dict[int, float]]
    W_vectors: list[dict[int, float]]
    visited: frozenset[int] = field(default_factory=frozenset)  # every coordinate touched

    @property
    def stalled(self) -> bool:
        return not self.S_layers[self.t]

    def layer_size(self, s: int) -> int:
        return len(self.S_layers[s])

    def dump(self, graph: BipartiteGraph | None = None) -> str:
        lines = [f"root {self.root} t={self.t}"]
        for s in range(1, self.t + 1):
            if graph is not None:
                U = ", ".join(f"{graph.pairs[pid]}:{self.W_vectors[s][pid]:.4g}" for pid in self.U_layers[s])
            else:
                U = ", ".join(f"{pid}:{self.W_vectors[s][pid]:.4g}" for pid in self.U_layers[s])
            S = ", ".join(f"{a}:{self.N_vectors[s][a]:.4g}" for a in self.S_layers[s])
            lines.append(f"  U[{s}] ({len(self.U_layers[s])}): {U}")
            lines.append(f"  S[{s}] ({len(self.S_layers[s])}): {S}")
        return "\n".join(lines)


def _pick(rng, options):
    if len(options) == 1:
        return options[0]
    return options[int(rng.integers(len(options)))]


def build_constrained_bfs(graph: BipartiteGraph, u: int, t: int, seed: int) -> BfsTree:
    """Grow alternating pair/coordinate layers from root ``u`` to depth 2t.

    A vertex is admissible at a depth only if none of its coordinates was
    touched at any earlier depth; coordinates are committed to the visited
    set after a depth is fully expanded, so siblings within one depth may
    share coordinates. Every admissible vertex joins its layer; when several
    parents are possible, one is drawn uniformly from the root's RNG stream.
    """
    rng = derive_rng(seed, "bfs", u)
    visited = {u}
    S_layers: list[list[int]] = [[u]]
    U_layers: list[list[int]] = [[]]
    N_vectors: list[dict[int, float]] = [{u: 1.0}]
    W_vectors: list[dict[int, float]] = [{}]
    coord_parent: dict[int, int] = {}
    pair_parent: dict[int, int] = {}

    for _ in range(t):
        prev_N = N_vectors[-1]
        cand: dict[int, list[tuple[int, float]]] = {}
        for a in S_layers[-1]:
            for pid, w in graph.adjacency[a]:
                b, c = graph.pairs[pid]
                if b not in visited and c not in visited:
                    cand.setdefault(pid, []).append((a, w))
        U = sorted(cand)
        W: dict[int, float] = {}
        for pid in U:
            a, w = _pick(rng, cand[pid])
            pair_parent[pid] = a
            W[pid] = w * prev_N[a]
        for pid in U:
            visited.update(graph.pairs[pid])

        cand_c: dict[int, list[tuple[int, float]]] = {}
        for pid in U:
            for a, w in graph.reverse[pid]:
                if a not in visited:
                    cand_c.setdefault(a, []).append((pid, w))
        S = sorted(cand_c)
        N: dict[int, float] = {}
        for a in S:
            pid, w = _pick(rng, cand_c[a])
            coord_parent[a] = pid
            N[a] = w * W[pid]
        visited.update(S)

        U_layers.append(U)
        S_layers.append(S)
        W_vectors.append(W)
        N_vectors.append(N)

    return BfsTree(u, t, S_layers, U_layers, coord_parent, pair_parent, N_vectors, W_vectors, frozenset(visited))


def build_all_trees(graph: BipartiteGraph, t: int, seed: int) -> list[BfsTree]:
    return [build_constrained_bfs(graph, u, t, seed) for u in range(graph.n)]


def normalized_N(tree: BfsTree, s: int) -> dict[int, float]:
    size = len(tree.S_layers[s])
    if size == 0:
        raise EmptyLayerError(f"layer S[{s}] of root {tree.root} is empty")
    return {a: x / size for a, x in tree.N_vectors[s].items()}


# ---------------------------------------------------------------------------
# growth diagnostics


@dataclass
class LayerCheck:
    kind: str  # "U" or "S"
    s: int
    observed: int
    lower: float
    upper: float

    @property
    def inside(self) -> bool:
        return self.lower <= self.observed <= self.upper


@dataclass
class GrowthReport:
    epsilon: float
    delta: float
    layers: list[LayerCheck]

    def check(self, kind: str, s: int) -> LayerCheck:
        return next(c for c in self.layers if c.kind == kind and c.s == s)

    @property
    def all_inside(self) -> bool:
        return all(c.inside for c in self.layers)


def growth_interval(kind: str, s: int, t: int, n: int, epsilon: float, delta: float) -> tuple[float, float]:
    """Layer-size interval for |U_s| or |S_s|, with the vanishing terms dropped."""
    if kind == "U":
        e = 0.5 + epsilon * (2 * s - 1)
        return (1 - delta) ** (2 * s - 1) * 2.0 ** (-3 * s) * n**e, (1 + delta) ** (2 * s - 1) * 2.0 ** (-s) * n**e
    lo_pow = -3 * s - (1 if s == t else 0)
    e = 2 * epsilon * s
    return (1 - delta) ** (2 * s) * 2.0**lo_pow * n**e, (1 + delta) ** (2 * s) * 2.0 ** (-s) * n**e


def layer_growth_report(tree: BfsTree, n: int, p: float, delta: float) -> GrowthReport:
    """Compare observed layer sizes with the growth interval at p = n^(-3/2 + eps).

    ``p`` should be the density of the observations that built the graph.
    """
    epsilon = math.log(p * n**1.5) / math.log(n)
    checks = []
    for s in range(1, tree.t + 1):
        for kind, layer in (("U", tree.U_layers[s]), ("S", tree.S_layers[s])):
            lo, hi = growth_interval(kind, s, tree.t, n, epsilon, delta)
            checks.append(LayerCheck(kind, s, len(layer), lo, hi))
    return GrowthReport(epsilon, delta, checks)
