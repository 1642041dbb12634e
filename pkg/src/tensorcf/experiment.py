"""Experiment configuration, single runs and parameter sweeps."""
from __future__ import annotations

import csv
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from ._seeding import derive_seed
from .bfs import build_all_trees, layer_growth_report, radius
from .distance import DistanceMatrix, all_pairs_distances, naive_distance_matrix
from .errors import BelowThresholdError
from .estimator import default_eta, estimate_all
from .evaluation import MetricsReport, distance_concentration_report, evaluate
from .graph import build_bipartite_graph
from .model import sample_latent_model, sample_observations
from .split import SplitObservations, fresh_observations, split_observations

SWEEP_SCHEMA = "# tensorcf-sweep v1"
SWEEP_COLUMNS = [
    "epsilon", "p", "trial", "seed", "mse", "max_error", "fallback_fraction",
    "valid_pair_fraction", "failed", "error", "wall_time",
]
OUTPUT_DIR_ENV = "TENSORCF_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    n: int = 200
    r: int = 2
    lambdas: list = field(default_factory=lambda: [1.0, 0.6])
    basis: str = "legendre"
    sigma: float = 0.05
    # sparsity: exactly one of p or epsilon, with p = n^(-3/2 + epsilon)
    p: float | None = None
    epsilon: float | None = None
    psi: float | None = None  # None -> epsilon / 4
    eta: Any = "auto"
    c_eta: float = 1.0
    t: Any = "auto"
    split_mode: str = "bernoulli"  # or "fresh": two independent samples at density p
    split_prob: float = 0.5
    seed: int = 0
    trials: int = 1
    output_dir: str | None = None
    write_distances: bool = False
    baseline: bool = False
    oracle: bool = False
    oracle_pairs: int = 500
    growth_delta: float = 0.5

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if (self.p is None) == (self.epsilon is None):
            raise ConfigError("give exactly one of p or epsilon")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.n < 4:
            raise ConfigError("n must be >= 4")
        if (self.t == "auto" or self.eta == "auto") and self.epsilon is None:
            raise ConfigError("auto t / auto eta require epsilon-form sparsity")
        if self.split_mode not in ("bernoulli", "fresh"):
            raise ConfigError(f"unknown split_mode {self.split_mode!r}")

    @property
    def density(self) -> float:
        return self.p if self.p is not None else self.n ** (-1.5 + self.epsilon)

    @property
    def psi_value(self) -> float:
        return self.psi if self.psi is not None else self.epsilon / 4.0

    def with_updates(self, **kw) -> "ExperimentConfig":
        d = asdict(self)
        d.update(kw)
        return ExperimentConfig(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ExperimentConfig":
        with open(path) as fh:
            d = yaml.safe_load(fh) or {}
        # nested sections are flattened: {sparsity: {epsilon: 0.3}} -> {epsilon: 0.3}
        flat = {}
        for k, v in d.items():
            if isinstance(v, dict):
                flat.update(v)
            else:
                flat[k] = v
        return cls.from_dict(flat)


@dataclass
class RunResult:
    metrics: MetricsReport
    distances: DistanceMatrix
    split: SplitObservations
    t: int
    eta: float


def _resolve_output_dir(cfg: ExperimentConfig) -> Path | None:
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        return Path(override)
    return Path(cfg.output_dir) if cfg.output_dir else None


def run_single(cfg: ExperimentConfig, seed: int | None = None, write: bool = True) -> RunResult:
    """Model -> observations -> split -> graph -> trees -> distances -> estimates -> metrics."""
    seed = cfg.seed if seed is None else seed
    n = cfg.n
    p = cfg.density
    if not 0.0 < p <= 1.0:
        raise BelowThresholdError(f"density p = {p:.4g} outside (0, 1]")
    t = radius(n, p) if cfg.t == "auto" else int(cfg.t)
    eta = default_eta(n, cfg.epsilon, cfg.psi_value, cfg.c_eta) if cfg.eta == "auto" else float(cfg.eta)

    seeds = {name: derive_seed(seed, name) for name in ("model", "observations", "split", "bfs", "oracle")}
    model = sample_latent_model(n, cfg.r, cfg.lambdas, cfg.basis, seeds["model"])
    if cfg.split_mode == "fresh":
        split = fresh_observations(model, p, cfg.sigma, seeds["observations"])
    else:
        obs = sample_observations(model, p, cfg.sigma, seeds["observations"])
        split = split_observations(obs, seeds["split"], cfg.split_prob)

    graph = build_bipartite_graph(split.omega1, split.set_a, n)
    trees = build_all_trees(graph, t, seeds["bfs"])
    dist = all_pairs_distances(graph, split.omega1, n, p, t, seeds["bfs"], split.set_b, trees=trees)
    estimates = estimate_all(dist, split.omega3, eta)
    report = evaluate(estimates, model, dist, seeds={"master": seed, **seeds})
    report.extra.update(
        t=t, eta=eta, p=p, phi=dist.phi, epsilon=cfg.epsilon,
        omega1_size=len(split.omega1), omega3_size=len(split.omega3),
        stalled_fraction=float(np.mean([tr.stalled for tr in trees])),
    )
    if cfg.baseline:
        _, counts = naive_distance_matrix(split.omega1)
        off = ~np.eye(n, dtype=bool)
        report.extra["naive_invalid_fraction"] = float(np.mean(counts[off] == 0))
    if cfg.oracle:
        conc = distance_concentration_report(dist, model, t, cfg.oracle_pairs, seeds["oracle"])
        report.extra["oracle"] = asdict(conc)
        growth = [layer_growth_report(tr, n, split.omega1.p, cfg.growth_delta) for tr in trees]
        report.extra["growth_U1_inside_fraction"] = float(np.mean([g.check("U", 1).inside for g in growth]))

    out_dir = _resolve_output_dir(cfg) if write else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"metrics_{seed}.json").write_text(report.to_json() + "\n")
        if cfg.write_distances:
            with open(out_dir / f"distances_{seed}.csv", "w") as fh:
                dist.write_csv(fh)
    return RunResult(report, dist, split, t, eta)


# ---------------------------------------------------------------------------
# sweeps


def _cell(cfg: ExperimentConfig, axis: str, value: float, trial: int) -> dict:
    seed = derive_seed(cfg.seed, "trial", trial)
    row = {"trial": trial, "seed": seed, "failed": 0, "error": ""}
    start = time.perf_counter()
    try:
        if axis == "epsilon":
            cell_cfg = cfg.with_updates(epsilon=value, p=None)
        else:
            cell_cfg = cfg.with_updates(p=value, epsilon=None)
        row["epsilon"] = cell_cfg.epsilon if cell_cfg.epsilon is not None else ""
        row["p"] = cell_cfg.density
        m = run_single(cell_cfg, seed, write=False).metrics
        row.update(mse=m.mse, max_error=m.max_error, fallback_fraction=m.fallback_fraction,
                   valid_pair_fraction=m.valid_pair_fraction)
    except Exception as exc:  # one bad cell must not abort the sweep
        row.setdefault("epsilon", value if axis == "epsilon" else "")
        row.setdefault("p", value if axis == "p" else "")
        row.update(mse="", max_error="", fallback_fraction="", valid_pair_fraction="",
                   failed=1, error=f"{type(exc).__name__}: {exc}")
    row["wall_time"] = round(time.perf_counter() - start, 3)
    return row


def run_sweep(cfg: ExperimentConfig, grid, trials: int | None = None, axis: str = "epsilon", workers: int = 1) -> list[dict]:
    """One row per (grid value, trial). Trial k uses the same seed at every grid value."""
    grid = list(grid)
    if not grid:
        raise ConfigError("sweep grid is empty")
    if axis not in ("epsilon", "p"):
        raise ConfigError("axis must be 'epsilon' or 'p'")
    trials = cfg.trials if trials is None else trials
    if axis == "p" and (cfg.t == "auto" or cfg.eta == "auto"):
        raise ConfigError("a p-axis sweep needs explicit t and eta")
    jobs = [(value, k) for value in grid for k in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_cell, [cfg] * len(jobs), [axis] * len(jobs), *zip(*jobs)))
    return [_cell(cfg, axis, value, k) for value, k in jobs]


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(SWEEP_SCHEMA + "\n")
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row.get(c, "")) for c in SWEEP_COLUMNS])


def read_sweep_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def summarize(rows: list[dict], key: str = "epsilon") -> list[dict]:
    """Median metrics per grid value over non-failed trials."""
    groups: dict[str, list[dict]] = {}
    for row in rows:
        groups.setdefault(str(row[key]), []).append(row)
    out = []
    for value, rs in groups.items():
        ok = [r for r in rs if int(r["failed"]) == 0]
        entry = {key: value, "trials": len(rs), "failed": len(rs) - len(ok)}
        for m in ("mse", "max_error", "fallback_fraction", "valid_pair_fraction"):
            vals = [float(r[m]) for r in ok]
            entry[f"median_{m}"] = statistics.median(vals) if vals else math.nan
        out.append(entry)
    return sorted(out, key=lambda e: float(e[key]) if e[key] != "" else math.inf)


def write_summary_csv(summary: list[dict], path) -> None:
    if not summary:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        fh.write(SWEEP_SCHEMA + " summary\n")
        w = csv.DictWriter(fh, fieldnames=list(summary[0]))
        w.writeheader()
        for e in summary:
            w.writerow({k: _fmt(v) for k, v in e.items()})


def dump_generated(cfg: ExperimentConfig, seed: int | None = None) -> dict:
    """Model and observation set as one JSON-ready document."""
    seed = cfg.seed if seed is None else seed
    model = sample_latent_model(cfg.n, cfg.r, cfg.lambdas, cfg.basis, derive_seed(seed, "model"))
    obs = sample_observations(model, cfg.density, cfg.sigma, derive_seed(seed, "observations"))
    return {"config": cfg.to_dict(), "seed": seed, "model": model.to_dict(), "observations": obs.to_dict()}
