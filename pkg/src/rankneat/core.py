"""Linear ranker, Siamese pair scoring and the cross-entropy objective.

Both trainers share this module: the SGD trainer updates a dense ranker,
the evolutionary trainer decodes genomes into sparse rankers. A ranker is
a bias-free weighted sum; the pairwise output is the score difference of
the two inputs squashed through a sigmoid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatchError, EmptyDatasetError

# Probabilities are clamped away from {0, 1} so the loss stays finite.
PROB_EPS = 1e-7

MAX_BCE = -float(np.log(PROB_EPS))


@dataclass(frozen=True)
class LinearRanker:
    """Sparse linear scoring function: absent index means weight zero.

    There is no bias term: the pairwise output is a score difference, so
    any bias cancels and would be unlearnable.
    """

    dimension: int
    weights: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for idx, w in self.weights.items():
            if not 0 <= idx < self.dimension:
                raise DimensionMismatchError(
                    f"weight index {idx} outside [0, {self.dimension})"
                )
            if not np.isfinite(w):
                raise ValueError(f"non-finite weight at index {idx}: {w}")

    @classmethod
    def from_dense(cls, vector: np.ndarray) -> "LinearRanker":
        vector = np.asarray(vector, dtype=float)
        return cls(dimension=vector.size,
                   weights={i: float(w) for i, w in enumerate(vector)})

    def as_dense(self) -> np.ndarray:
        dense = np.zeros(self.dimension)
        for idx, w in self.weights.items():
            dense[idx] = w
        return dense

    def score(self, x: np.ndarray) -> float:
        """Weighted sum over present weights."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise DimensionMismatchError(
                f"expected vector of length {self.dimension}, got shape {x.shape}"
            )
        return float(sum(w * x[i] for i, w in self.weights.items()))

    def score_matrix(self, features: np.ndarray) -> np.ndarray:
        """Scores for a stack of feature vectors, shape (n, dimension)."""
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[1] != self.dimension:
            raise DimensionMismatchError(
                f"expected (n, {self.dimension}) matrix, got shape {features.shape}"
            )
        return features @ self.as_dense()

    def to_json_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "weights": {str(i): w for i, w in sorted(self.weights.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, payload: dict) -> "LinearRanker":
        return cls(dimension=int(payload["dimension"]),
                   weights={int(i): float(w) for i, w in payload["weights"].items()})

    @classmethod
    def from_json(cls, text: str) -> "LinearRanker":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class PairScore:
    """Siamese output for one ordered pair: z = f(x_i) - f(x_j), p = sigmoid(z)."""

    z: float
    probability: float


def sigmoid(z):
    return expit(z)


def pair_logit(ranker: LinearRanker, x_i: np.ndarray, x_j: np.ndarray) -> PairScore:
    """Score an ordered pair; antisymmetric in its arguments."""
    z = ranker.score(x_i) - ranker.score(x_j)
    return PairScore(z=z, probability=float(expit(z)))


def bce(probability, y):
    """Binary cross-entropy with the probability clamped to [eps, 1-eps].

    Each label's probability term is clamped separately so the loss ceiling
    -ln(eps) holds exactly in floating point.
    """
    probability = np.asarray(probability, dtype=float)
    p = np.clip(probability, PROB_EPS, 1.0 - PROB_EPS)
    q = np.clip(1.0 - probability, PROB_EPS, 1.0 - PROB_EPS)
    y = np.asarray(y, dtype=float)
    return -(y * np.log(p) + (1.0 - y) * np.log(q))


def _pair_logits(ranker: LinearRanker, dataset) -> np.ndarray:
    diffs = dataset.diffs()
    if diffs.shape[1] != ranker.dimension:
        raise DimensionMismatchError(
            f"ranker dimension {ranker.dimension} != dataset dimension {diffs.shape[1]}"
        )
    return diffs @ ranker.as_dense()


def pair_accuracy(ranker: LinearRanker, dataset) -> float:
    """Fraction of pairs ranked consistently with their labels.

    A pair with z exactly 0 earns half credit, so an all-pruned ranker
    scores exactly 0.5 on any balanced dataset (the chance baseline).
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot compute accuracy on an empty dataset")
    z = _pair_logits(ranker, dataset)
    y = dataset.labels()
    credit = np.where(z > 0, y, np.where(z < 0, 1.0 - y, 0.5))
    return float(credit.mean())


def mean_bce(ranker: LinearRanker, dataset) -> float:
    """Mean binary cross-entropy of sigmoid(z) against the labels."""
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot compute loss on an empty dataset")
    z = _pair_logits(ranker, dataset)
    return float(bce(expit(z), dataset.labels()).mean())


@dataclass(frozen=True)
class TrajectoryPoint:
    iteration: int
    train_accuracy: float
    test_accuracy: float
    mean_loss: float


@dataclass
class TrainTrajectory:
    """Per-iteration record of a single training run plus its final model."""

    points: list[TrajectoryPoint]
    final_model: LinearRanker

    def iterations(self) -> list[int]:
        return [p.iteration for p in self.points]

    def test_accuracies(self) -> list[float]:
        return [p.test_accuracy for p in self.points]

    def train_accuracies(self) -> list[float]:
        return [p.train_accuracy for p in self.points]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("iteration,train_acc,test_acc,mean_loss\n")
            for p in self.points:
                fh.write(f"{p.iteration},{p.train_accuracy!r},"
                         f"{p.test_accuracy!r},{p.mean_loss!r}\n")


def random_ranker(dimension: int, rng: np.random.Generator) -> LinearRanker:
    """Fully connected ranker with i.i.d. standard-normal weights."""
    return LinearRanker.from_dense(rng.normal(0.0, 1.0, size=dimension))
