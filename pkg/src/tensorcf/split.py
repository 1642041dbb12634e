"""Sample splitting and the coordinate halves that define the pair sets."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ._seeding import derive_rng
from .model import LatentModel, ObservationSet, sample_observations


@dataclass
class SplitObservations:
    omega1: ObservationSet  # builds the graph and the distances
    omega3: ObservationSet  # averaged by the final estimator
    set_a: np.ndarray
    set_b: np.ndarray

    @property
    def n(self) -> int:
        return self.omega1.n

    def to_dict(self) -> dict:
        return {
            "omega1": self.omega1.to_dict(),
            "omega3": self.omega3.to_dict(),
            "set_a": self.set_a.tolist(),
            "set_b": self.set_b.tolist(),
        }


def coordinate_halves(n: int) -> tuple[np.ndarray, np.ndarray]:
    h = n // 2
    return np.arange(h), np.arange(h, n)


def split_observations(obs: ObservationSet, seed: int, prob: float = 0.5) -> SplitObservations:
    """Send each entry to omega1 with probability ``prob``, else to omega3.

    Each half records its effective density (p * prob, p * (1 - prob)).
    """
    if not 0.0 < prob < 1.0:
        raise ValueError("split probability must lie in (0, 1)")
    to_first = derive_rng(seed, "split").random(len(obs)) < prob
    set_a, set_b = coordinate_halves(obs.n)
    return SplitObservations(
        obs.subset(to_first, obs.p * prob),
        obs.subset(~to_first, obs.p * (1.0 - prob)),
        set_a,
        set_b,
    )


def fresh_observations(model: LatentModel, p: float, sigma: float, seed: int) -> SplitObservations:
    """Two independent observation sets at density p each (no splitting)."""
    set_a, set_b = coordinate_halves(model.n)
    return SplitObservations(
        sample_observations(model, p, sigma, seed, tag="obs-1"),
        sample_observations(model, p, sigma, seed, tag="obs-3"),
        set_a,
        set_b,
    )


def _pairs_within(coords) -> list[tuple[int, int]]:
    return [(int(b), int(c)) for b, c in combinations(sorted(coords), 2)]


def pair_set_A(n: int) -> list[tuple[int, int]]:
    if n < 4:
        raise ValueError("need n >= 4 for nonempty pair sets")
    return _pairs_within(coordinate_halves(n)[0])


def pair_set_B(n: int) -> list[tuple[int, int]]:
    if n < 4:
        raise ValueError("need n >= 4 for nonempty pair sets")
    return _pairs_within(coordinate_halves(n)[1])
