"""Pairwise preference learning over fixed feature vectors.

Two trainers share one linear Siamese ranker: RankNEAT evolves sparse edge
sets and weights with speciated neuroevolution, RankNet fits dense weights
with minibatch SGD. The package also ships the annotation-to-pairs data
pipeline, a leave-participants-out cross-validation harness, a synthetic
corpus generator with a Bayes-optimal reference, and a reporting CLI.
"""

from .core import (
    LinearRanker,
    PairScore,
    TrainTrajectory,
    TrajectoryPoint,
    bce,
    mean_bce,
    pair_accuracy,
    pair_logit,
    random_ranker,
    sigmoid,
)
from .data import (
    AnnotationTrace,
    FeatureWindow,
    PairDataset,
    PreferencePair,
    WindowedSession,
    build_pairs,
    dataset_volume_ratio,
    ingest,
    normalize_trace,
    window_labels,
)
from .evaluation import (
    ExperimentReport,
    FoldPlan,
    TrainerSpec,
    confidence_interval,
    plan_folds,
    run_experiment,
)
from .neat import (
    EdgeGene,
    Genome,
    NeatConfig,
    Population,
    Species,
    compatibility_distance,
    crossover,
    evolve,
    fitness,
    init_population,
    mutate,
    next_generation,
    speciate,
)
from .sgd import SgdConfig, pair_gradient, train, train_epoch
from .synthetic import SyntheticSpec, bayes_accuracy, generate

__version__ = "0.1.0"
