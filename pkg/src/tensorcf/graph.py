"""Bipartite graph between coordinates and coordinate pairs of the flattened tensor."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import TextIO

import numpy as np

from .model import ObservationSet


@dataclass
class BipartiteGraph:
    n: int
    pairs: list[tuple[int, int]]  # pair-vertex id -> (b, c), b < c, lexicographic
    adjacency: list[list[tuple[int, float]]]  # coordinate -> [(pair id, weight)]
    reverse: list[list[tuple[int, float]]]  # pair id -> [(coordinate, weight)]
    pair_index: dict[tuple[int, int], int] = field(repr=False, default_factory=dict)

    @property
    def num_edges(self) -> int:
        return sum(len(x) for x in self.adjacency)

    def edges(self):
        for a, nbrs in enumerate(self.adjacency):
            for pid, w in nbrs:
                b, c = self.pairs[pid]
                yield a, b, c, w

    def write_edge_list(self, fh: TextIO) -> None:
        for a, b, c, w in self.edges():
            fh.write(f"{a} {b} {c} {w!r}\n")


def build_bipartite_graph(omega1: ObservationSet, set_a, n: int | None = None) -> BipartiteGraph:
    """Connect coordinate a to pair (b, c) whenever the triple {a, b, c} is in omega1.

    Pairs range over b < c inside ``set_a``; a must differ from both b and c.
    Each sorted triple may yield up to three edges (one per choice of a),
    all weighted by the same observed value. Triples with no valid reading
    contribute nothing.
    """
    n = omega1.n if n is None else n
    domain = sorted(int(x) for x in set_a)
    in_domain = np.zeros(n, dtype=bool)
    in_domain[domain] = True
    pairs = list(combinations(domain, 2))
    pair_index = {pc: i for i, pc in enumerate(pairs)}
    adjacency: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    reverse: list[list[tuple[int, float]]] = [[] for _ in pairs]

    for (x, y, z), w in zip(omega1.triples.tolist(), omega1.values.tolist()):
        for a, b, c in ((x, y, z), (y, x, z), (z, x, y)):
            if b < c and a != b and a != c and in_domain[b] and in_domain[c]:
                pid = pair_index[(b, c)]
                adjacency[a].append((pid, w))
                reverse[pid].append((a, w))
    # ascending neighbor ids keep traversal order deterministic
    for lst in adjacency:
        lst.sort()
    for lst in reverse:
        lst.sort()
    return BipartiteGraph(n, pairs, adjacency, reverse, pair_index)
