"""RankNet training: minibatch SGD on the pairwise cross-entropy.

Each epoch samples a fresh batch of pairs without replacement, averages
their gradients and takes one plain gradient step (no momentum, no weight
decay). One epoch counts as one iteration in cross-trainer comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import core
from .core import LinearRanker, TrainTrajectory, TrajectoryPoint
from .data import PairDataset
from .errors import BatchTooLargeError, DimensionMismatchError, EmptyDatasetError


@dataclass(frozen=True)
class SgdConfig:
    batch_number: int = 10       # pairs sampled per epoch
    learning_rate: float = 0.01
    epochs: int = 1500
    seed: int = 0

    def __post_init__(self):
        if self.batch_number < 1:
            raise ValueError("batch_number must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def pair_gradient(ranker: LinearRanker, x_i: np.ndarray, x_j: np.ndarray,
                  y: int) -> np.ndarray:
    """Gradient of the pairwise cross-entropy w.r.t. all weights.

    The gradient is dense over the full dimension even when the current
    ranker is sparse: the SGD network is fully connected.
    """
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    if x_i.shape != x_j.shape or x_i.shape != (ranker.dimension,):
        raise DimensionMismatchError(
            f"expected two vectors of length {ranker.dimension}, "
            f"got {x_i.shape} and {x_j.shape}"
        )
    diff = x_i - x_j
    z = float(ranker.as_dense() @ diff)
    return (expit(z) - y) * diff


def train_epoch(ranker: LinearRanker, training: PairDataset, cfg: SgdConfig,
                rng: np.random.Generator) -> LinearRanker:
    """One epoch: sample cfg.batch_number pairs, step along the mean gradient."""
    n = len(training)
    if n == 0:
        raise EmptyDatasetError("cannot train on an empty pair dataset")
    if cfg.batch_number > n:
        raise BatchTooLargeError(
            f"batch_number {cfg.batch_number} exceeds training size {n}"
        )
    batch = rng.choice(n, size=cfg.batch_number, replace=False)
    diffs = training.diffs()[batch]
    labels = training.labels()[batch]
    weights = ranker.as_dense()
    z = diffs @ weights
    gradient = ((expit(z) - labels)[:, None] * diffs).mean(axis=0)
    return LinearRanker.from_dense(weights - cfg.learning_rate * gradient)


def train(initial: LinearRanker, training: PairDataset, test: PairDataset,
          cfg: SgdConfig) -> TrainTrajectory:
    """Run cfg.epochs epochs, recording accuracies at every iteration.

    Iteration 0 records the untouched initial ranker. There is no early
    stopping: the full trajectory is kept so late-run overfitting stays
    visible. Each epoch's batch depends only on (seed, epoch index).
    """
    def record(iteration: int, ranker: LinearRanker) -> TrajectoryPoint:
        return TrajectoryPoint(
            iteration=iteration,
            train_accuracy=core.pair_accuracy(ranker, training),
            test_accuracy=core.pair_accuracy(ranker, test),
            mean_loss=core.mean_bce(ranker, training),
        )

    ranker = initial
    points = [record(0, ranker)]
    for epoch in range(1, cfg.epochs + 1):
        rng = np.random.default_rng([cfg.seed, epoch])
        ranker = train_epoch(ranker, training, cfg, rng)
        points.append(record(epoch, ranker))
    return TrainTrajectory(points=points, final_model=ranker)
