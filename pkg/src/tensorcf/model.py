"""Latent-variable tensor model and noisy Bernoulli observations.

The ground truth is the symmetric tensor

    F(u, v, w) = scale * sum_k lambda_k q_k(theta_u) q_k(theta_v) q_k(theta_w)

with theta_u ~ U[0, 1] and q_k an orthonormal, bounded family on [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg

from ._seeding import derive_rng

BASES = ("legendre", "cosine")


def basis_bound(basis: str, r: int) -> float:
    """Uniform bound B on |q_k| for k = 1..r."""
    if basis == "legendre":
        # shifted Legendre peaks at the endpoints: |q_k(0)| = sqrt(2k - 1)
        return math.sqrt(2 * r - 1)
    if basis == "cosine":
        return 1.0 if r == 1 else math.sqrt(2.0)
    raise ValueError(f"unknown basis {basis!r}")


def eigenfunction(basis: str, k: int, theta, r: int | None = None):
    """Evaluate q_k(theta), with k counted from 1.

    ``legendre``: sqrt(2k-1) * P_{k-1}(2 theta - 1), the shifted Legendre
    polynomials normalized to unit L2 norm on [0, 1].
    ``cosine``: 1 for k = 1, sqrt(2) cos((k-1) pi theta) otherwise.

    Pass ``r`` to have k range-checked against a model rank.
    """
    if k < 1 or (r is not None and k > r):
        raise ValueError(f"eigenfunction index k={k} out of range")
    theta = np.asarray(theta, dtype=float)
    if basis == "legendre":
        coef = np.zeros(k)
        coef[-1] = 1.0
        out = math.sqrt(2 * k - 1) * npleg.legval(2.0 * theta - 1.0, coef)
    elif basis == "cosine":
        out = np.ones_like(theta) if k == 1 else math.sqrt(2.0) * np.cos((k - 1) * math.pi * theta)
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LatentModel:
    n: int
    lambdas: np.ndarray  # raw eigenvalues, sorted by |lambda| descending
    thetas: np.ndarray
    basis: str
    B: float
    scale: float

    @property
    def r(self) -> int:
        return len(self.lambdas)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues actually carried by F (raw lambdas times scale)."""
        return self.scale * self.lambdas

    def features(self) -> np.ndarray:
        """r x n matrix Q with Q[k, a] = q_{k+1}(theta_a)."""
        return np.stack([eigenfunction(self.basis, k, self.thetas) for k in range(1, self.r + 1)])

    def values(self, u, v, w) -> np.ndarray:
        """Vectorized F over index arrays (0-based coordinates)."""
        Q = self.features()
        u, v, w = (np.asarray(x, dtype=np.int64) for x in (u, v, w))
        return self.values_from_features(Q, u, v, w)

    def values_from_features(self, Q, u, v, w) -> np.ndarray:
        # explicit loop over k so every caller sums in the same order
        acc = np.zeros(np.broadcast(u, v, w).shape)
        for k in range(self.r):
            acc = acc + self.lambdas[k] * (Q[k, u] * Q[k, v] * Q[k, w])
        return self.scale * acc

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "lambdas": self.lambdas.tolist(),
            "thetas": self.thetas.tolist(),
            "basis": self.basis,
            "B": self.B,
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LatentModel":
        return cls(
            n=int(d["n"]),
            lambdas=np.asarray(d["lambdas"], dtype=float),
            thetas=np.asarray(d["thetas"], dtype=float),
            basis=d["basis"],
            B=float(d["B"]),
            scale=float(d["scale"]),
        )


def sample_latent_model(n: int, r: int, lambdas, basis: str = "legendre", seed: int = 0) -> LatentModel:
    lambdas = np.asarray(lambdas, dtype=float).ravel()
    if lambdas.size == 0:
        raise ValueError("lambdas must be nonempty")
    if n < 2 or r < 1:
        raise ValueError("need n >= 2 and r >= 1")
    if r > n:
        raise ValueError(f"rank r={r} exceeds n={n}")
    if lambdas.size != r:
        raise ValueError(f"expected {r} eigenvalues, got {lambdas.size}")
    if np.any(lambdas == 0):
        raise ValueError("eigenvalues must be nonzero")
    if basis not in BASES:
        raise ValueError(f"unknown basis {basis!r}")

    lambdas = lambdas[np.argsort(-np.abs(lambdas), kind="stable")]
    B = basis_bound(basis, r)
    scale = min(1.0, 1.0 / float(np.sum(np.abs(lambdas)) * B**3))
    thetas = derive_rng(seed, "thetas").uniform(0.0, 1.0, size=n)
    return LatentModel(n=n, lambdas=lambdas, thetas=thetas, basis=basis, B=B, scale=scale)


def eval_f(model: LatentModel, u: int, v: int, w: int) -> float:
    for x in (u, v, w):
        if not 0 <= x < model.n:
            raise IndexError(f"coordinate {x} out of range for n={model.n}")
    return float(model.values(u, v, w))


# ---------------------------------------------------------------------------
# observations


@dataclass
class ObservationSet:
    """Sparse symmetric observations: sorted triples (u <= v <= w) and values."""

    n: int
    p: float
    sigma: float
    triples: np.ndarray  # (m, 3) int64, rows sorted, lexicographic row order
    values: np.ndarray  # (m,)

    def __len__(self) -> int:
        return len(self.values)

    def subset(self, mask, p: float) -> "ObservationSet":
        return ObservationSet(self.n, p, self.sigma, self.triples[mask], self.values[mask])

    def as_dict(self) -> dict:
        """Map from sorted triple to value."""
        return {tuple(int(x) for x in t): float(val) for t, val in zip(self.triples, self.values)}

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "sigma": self.sigma,
            "entries": [[int(a), int(b), int(c), float(x)] for (a, b, c), x in zip(self.triples, self.values)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObservationSet":
        entries = d["entries"]
        triples = np.array([e[:3] for e in entries], dtype=np.int64).reshape(-1, 3)
        values = np.array([e[3] for e in entries], dtype=float)
        return cls(int(d["n"]), float(d["p"]), float(d["sigma"]), triples, values)


def count_sorted_triples(n: int) -> int:
    return n * (n + 1) * (n + 2) // 6


def unrank_sorted_triples(n: int, idx: np.ndarray) -> np.ndarray:
    """Map positions in the lexicographic list of u <= v <= w triples to triples."""
    iu, iv = np.triu_indices(n)  # (u, v) pairs with u <= v, lexicographic
    block = n - iv  # number of w >= v
    starts = np.concatenate(([0], np.cumsum(block)))
    pair = np.searchsorted(starts, idx, side="right") - 1
    w = iv[pair] + (idx - starts[pair])
    return np.column_stack([iu[pair], iv[pair], w]).astype(np.int64)


def sample_observations(model: LatentModel, p: float, sigma: float, seed: int, tag: str = "obs") -> ObservationSet:
    """Observe each distinct sorted triple independently with probability p.

    Noise is uniform on [-sigma sqrt(3), sigma sqrt(3)] (variance sigma^2);
    the noisy value is clamped to [-1, 1].
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = derive_rng(seed, tag)
    total = count_sorted_triples(model.n)
    m = int(rng.binomial(total, p))
    idx = np.sort(rng.choice(total, size=m, replace=False)) if m < total else np.arange(total)
    triples = unrank_sorted_triples(model.n, idx)
    Q = model.features()
    clean = model.values_from_features(Q, triples[:, 0], triples[:, 1], triples[:, 2])
    if sigma > 0:
        half = sigma * math.sqrt(3.0)
        vals = np.clip(clean + rng.uniform(-half, half, size=m), -1.0, 1.0)
    else:
        vals = clean
    return ObservationSet(model.n, float(p), float(sigma), triples, vals)
