"""Iterative collaborative filtering for sparse symmetric 3-order tensors."""
from .bfs import BfsTree, build_all_trees, build_constrained_bfs, layer_growth_report, normalized_N, radius
from .distance import (
    DistanceMatrix,
    all_pairs_distances,
    clip_T,
    compute_T,
    compute_Z,
    estimate_distance,
    naive_distance,
    oracle_distance,
    restricted_pair_set,
    threshold_phi,
)
from .errors import BelowThresholdError, DenseRegimeError, EmptyLayerError
from .estimator import EstimateResult, TensorEstimate, default_eta, estimate_all, estimate_entry, neighbor_set
from .evaluation import MetricsReport, distance_concentration_report, max_error, mse
from .experiment import ExperimentConfig, run_single, run_sweep
from .graph import BipartiteGraph, build_bipartite_graph
from .model import LatentModel, ObservationSet, eigenfunction, eval_f, sample_latent_model, sample_observations
from .split import SplitObservations, pair_set_A, pair_set_B, split_observations

__version__ = "0.1.0"

__all__ = [
    "BfsTree",
    "build_all_trees",
    "build_constrained_bfs",
    "layer_growth_report",
    "normalized_N",
    "radius",
    "DistanceMatrix",
    "all_pairs_distances",
    "clip_T",
    "compute_T",
    "compute_Z",
    "estimate_distance",
    "naive_distance",
    "oracle_distance",
    "restricted_pair_set",
    "threshold_phi",
    "BelowThresholdError",
    "DenseRegimeError",
    "EmptyLayerError",
    "EstimateResult",
    "TensorEstimate",
    "default_eta",
    "estimate_all",
    "estimate_entry",
    "neighbor_set",
    "MetricsReport",
    "distance_concentration_report",
    "max_error",
    "mse",
    "ExperimentConfig",
    "run_single",
    "run_sweep",
    "BipartiteGraph",
    "build_bipartite_graph",
    "LatentModel",
    "ObservationSet",
    "eigenfunction",
    "eval_f",
    "sample_latent_model",
    "sample_observations",
    "SplitObservations",
    "pair_set_A",
    "pair_set_B",
    "split_observations",
]
