"""Error metrics against the ground truth and distance diagnostics."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .distance import DistanceMatrix, oracle_distance_matrix
from .estimator import TensorEstimate
from .model import LatentModel


def _multiplicity(u: np.ndarray, v: int, w: np.ndarray) -> np.ndarray:
    """Number of ordered triples that sort to (u, v, w), u <= v <= w."""
    eq_uv = (u == v)[:, None]
    eq_vw = (w == v)[None, :]
    m = np.full((len(u), len(w)), 6.0)
    m[eq_uv | eq_vw] = 3.0
    m[eq_uv & eq_vw] = 1.0
    return m


def _error_stats(estimates, model: LatentModel) -> tuple[float, float]:
    n = model.n
    if isinstance(estimates, np.ndarray):
        idx = np.indices((n, n, n))
        F = model.values(idx[0], idx[1], idx[2])
        err = estimates - F
        return float(np.sum(err**2) / n**3), float(np.max(np.abs(err)))
    Q = model.features()
    total = 0.0
    worst = 0.0
    for sl in estimates.slices():
        v = sl.v
        u = np.arange(v + 1)
        w = np.arange(v, n)
        F = model.values_from_features(Q, u[:, None], np.int64(v), w[None, :])
        err = sl.values - F
        total += float(np.sum(_multiplicity(u, v, w) * err**2))
        worst = max(worst, float(np.max(np.abs(err))))
    return total / n**3, worst


def mse(estimates, model: LatentModel) -> float:
    """(1/n^3) * sum over all ordered triples of (F_hat - F)^2.

    ``estimates`` is a dense (n, n, n) array or a TensorEstimate.
    """
    return _error_stats(estimates, model)[0]


def max_error(estimates, model: LatentModel) -> float:
    return _error_stats(estimates, model)[1]


def ideal_bias(model: LatentModel, t: int, eta: float) -> float:
    """Worst-case |f(u,v,w) - f(a,b,c)| when each oracle distance is at most eta."""
    lam_r = abs(model.eigenvalues[-1])
    return 3.0 * model.B**2 * lam_r ** (-t) * math.sqrt(model.r * eta)


@dataclass
class MetricsReport:
    mse: float
    max_error: float
    fallback_fraction: float
    valid_pair_fraction: float
    seeds: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def evaluate(estimates: TensorEstimate, model: LatentModel, dist: DistanceMatrix, seeds: dict | None = None) -> MetricsReport:
    """Single pass over the slices for mse, max error and fallback fraction."""
    n = model.n
    Q = model.features()
    total = worst = fallback_weight = 0.0
    for sl in estimates.slices():
        v = sl.v
        u = np.arange(v + 1)
        w = np.arange(v, n)
        F = model.values_from_features(Q, u[:, None], np.int64(v), w[None, :])
        err = sl.values - F
        mult = _multiplicity(u, v, w)
        total += float(np.sum(mult * err**2))
        worst = max(worst, float(np.max(np.abs(err))))
        fallback_weight += float(np.sum(mult * sl.fallback))
    return MetricsReport(
        mse=total / n**3,
        max_error=worst,
        fallback_fraction=fallback_weight / n**3,
        valid_pair_fraction=dist.valid_pair_fraction(),
        seeds=dict(seeds or {}),
    )


@dataclass
class ConcentrationReport:
    n_pairs: int
    mean_abs_dev: float
    median_abs_dev: float
    quantiles: dict
    spearman: float
    frac_over_budget: float | None


def distance_concentration_report(
    dist: DistanceMatrix,
    model: LatentModel,
    t: int,
    sample_pairs: int | None = None,
    seed: int = 0,
    budget: float | None = None,
    exponent: int | None = None,
) -> ConcentrationReport:
    """Compare estimated and oracle distances over valid off-diagonal pairs.

    With ``sample_pairs`` set, that many valid pairs are drawn without
    replacement; otherwise all valid pairs are used.
    """
    iu, iv = np.triu_indices(dist.n, k=1)
    ok = dist.valid[iu, iv]
    iu, iv = iu[ok], iv[ok]
    if sample_pairs is not None and sample_pairs < len(iu):
        pick = np.random.default_rng(seed).choice(len(iu), size=sample_pairs, replace=False)
        iu, iv = iu[pick], iv[pick]
    est = dist.values[iu, iv]
    ora = oracle_distance_matrix(model, t, exponent)[iu, iv]
    dev = np.abs(est - ora)
    if len(dev) == 0:
        return ConcentrationReport(0, math.nan, math.nan, {}, math.nan, None)
    qs = {str(q): float(np.quantile(dev, q)) for q in (0.1, 0.25, 0.5, 0.75, 0.9)}
    rho = float(stats.spearmanr(est, ora).statistic) if len(dev) > 2 else math.nan
    over = None if budget is None else float(np.mean(dev > budget))
    return ConcentrationReport(len(dev), float(dev.mean()), float(np.median(dev)), qs, rho, over)
