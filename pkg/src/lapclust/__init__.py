"""Laplacian-regularized prototype clustering and transductive few-shot inference.

A scalable bound optimizer for prototype objectives (weighted means or kernel
modes) regularized by a sparse graph-Laplacian term, with per-point parallel
simplex updates, optional one-hot clamping of labeled points, and evaluation
utilities (NMI, Hungarian-matched accuracy).
"""

from .affinity import (
    SparseAffinity,
    estimate_sigma2,
    knn_graph,
    laplacian_quadratic,
    symmetrize,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateDataError,
    EmptyClusterError,
    LapclustError,
    ZeroVectorError,
)
from .fewshot import (
    EpisodeResult,
    PreprocessConfig,
    bias_correct,
    cl2_normalize,
    generate_synthetic_episode,
    init_prototypes,
    run_episode,
    tune_lambda,
)
from .io import (
    TaskSpec,
    load_features,
    load_labels,
    load_task,
    save_assignments,
    save_features,
    save_labels,
    save_task,
)
from .metrics import accuracy_hungarian, contingency_table, fewshot_accuracy, nmi
from .optimizer import (
    SoftAssignment,
    SolveReport,
    SolverConfig,
    auxiliary_value,
    discrete_objective,
    kmeans_pp_seeds,
    neighbor_votes,
    relaxed_objective,
    s_block,
    s_inner_update,
    solve,
)
from .prototypes import (
    ModeSolverConfig,
    Prototypes,
    meanshift_step,
    prototype_scores,
    update_means,
    update_modes,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DegenerateDataError",
    "EmptyClusterError",
    "EpisodeResult",
    "LapclustError",
    "ModeSolverConfig",
    "PreprocessConfig",
    "Prototypes",
    "SoftAssignment",
    "SolveReport",
    "SolverConfig",
    "SparseAffinity",
    "TaskSpec",
    "ZeroVectorError",
    "accuracy_hungarian",
    "auxiliary_value",
    "bias_correct",
    "cl2_normalize",
    "contingency_table",
    "discrete_objective",
    "estimate_sigma2",
    "fewshot_accuracy",
    "generate_synthetic_episode",
    "init_prototypes",
    "kmeans_pp_seeds",
    "knn_graph",
    "laplacian_quadratic",
    "load_features",
    "load_labels",
    "load_task",
    "meanshift_step",
    "neighbor_votes",
    "nmi",
    "prototype_scores",
    "relaxed_objective",
    "run_episode",
    "s_block",
    "s_inner_update",
    "save_assignments",
    "save_features",
    "save_labels",
    "save_task",
    "solve",
    "symmetrize",
    "tune_lambda",
    "update_means",
    "update_modes",
]
