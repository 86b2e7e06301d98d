"""Curriculum discovery toolkit.

Partitions training data into difficulty groups from annotation entropy or
loss priors, weights per-sample losses with generalized-logistic schedules,
optionally moves samples between groups during training, and searches the
(rate, shift) curriculum space with a Tree-structured Parzen Estimator.
"""

from .data import (
    AnnotatedSample,
    Dataset,
    difficulty_balanced_subsample,
    load_dataset,
    save_dataset,
    synthesize,
    to_jsonl,
)
from .difficulty import (
    DifficultyPartition,
    DifficultyPartitioner,
    entropy_score,
    entropy_scores,
    loss_prior,
    partition_kmeans1d,
    partition_quantile,
    partition_scores,
    score_dataset,
)
from .dynamics import reassign, reassign_groups, reassignment_log
from .harness import (
    TransferTarget,
    experiment,
    mean_stderr,
    rebuild_summary,
    sweep_k,
    transfer_matrix,
)
from .schedule import (
    CurriculumConfig,
    GLFParams,
    glf_weight,
    preset,
    trajectory,
    weighted_loss,
)
from .search import (
    SearchSpace,
    TrialRecord,
    TrialStore,
    assignment_to_config,
    discover,
    make_surrogate_runner,
    make_training_runner,
    run_trial,
    suggest,
    top_curricula_summary,
)
from .strategies import (
    CurriculumWeights,
    DifficultyPredictionWeights,
    HardExampleMiningWeights,
    SelfPacedWeights,
    SuperLossWeights,
    UniformWeights,
    WeightingStrategy,
    dp_difficulty,
    dp_weight,
    hard_mining_weight,
    lambert_w,
    make_strategy,
    spl_weight,
    superloss_sigma,
)
from .trainer import (
    CurriculumClassifier,
    TrainerConfig,
    TrainingDiverged,
    TrainReport,
    backward,
    forward_loss,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedSample",
    "CurriculumClassifier",
    "CurriculumConfig",
    "CurriculumWeights",
    "Dataset",
    "DifficultyPartition",
    "DifficultyPartitioner",
    "DifficultyPredictionWeights",
    "GLFParams",
    "HardExampleMiningWeights",
    "SearchSpace",
    "SelfPacedWeights",
    "SuperLossWeights",
    "TrainReport",
    "TrainerConfig",
    "TrainingDiverged",
    "TransferTarget",
    "TrialRecord",
    "TrialStore",
    "UniformWeights",
    "WeightingStrategy",
    "assignment_to_config",
    "backward",
    "difficulty_balanced_subsample",
    "discover",
    "dp_difficulty",
    "dp_weight",
    "entropy_score",
    "entropy_scores",
    "experiment",
    "forward_loss",
    "glf_weight",
    "hard_mining_weight",
    "lambert_w",
    "load_dataset",
    "loss_prior",
    "make_strategy",
    "make_surrogate_runner",
    "make_training_runner",
    "mean_stderr",
    "partition_kmeans1d",
    "partition_quantile",
    "partition_scores",
    "preset",
    "reassign",
    "reassign_groups",
    "reassignment_log",
    "rebuild_summary",
    "run_trial",
    "save_dataset",
    "score_dataset",
    "spl_weight",
    "suggest",
    "superloss_sigma",
    "sweep_k",
    "synthesize",
    "to_jsonl",
    "top_curricula_summary",
    "train",
    "trajectory",
    "transfer_matrix",
    "weighted_loss",
]
