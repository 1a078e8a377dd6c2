"""Synthetic corpora from a known sparse linear ground truth.

Sessions are generated the way the real pipeline expects to find them:
feature windows drawn i.i.d. standard normal and a latent score from a
sparse weight vector, min-max normalized per session. Label noise is added
on that unit-range scale (min-max makes any latent-scale noise degenerate:
only the noise-to-signal ratio would survive), then the noisy labels are
re-normalized into [0, 1]. A label_noise_std of 0.25 therefore means
"noise worth a quarter of the label range". Because the labels already
span [0, 1], serializing to CSV and re-ingesting reproduces the sessions
bit for bit, so the whole pipeline can be exercised end to end.

The ground-truth ranker doubles as the Bayes-optimal reference: among the
pairs that survive the preference threshold, ordering by true latent score
is the best any model can do in expectation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LinearRanker
from .data import (
    AnnotationTrace,
    FeatureWindow,
    PairDataset,
    WindowedSession,
    write_annotations_csv,
    write_features_csv,
)
from .errors import ConstantTraceError

# Sub-stream tags so weights, sessions and Monte-Carlo draws never collide.
_WEIGHTS_STREAM = 0
_SESSION_STREAM = 1
_MONTE_CARLO_STREAM = 2


@dataclass(frozen=True)
class SyntheticSpec:
    """Desk-scale corpus description; defaults run in minutes, not hours."""

    dimension: int = 32
    signal_fraction: float = 0.5
    n_participants: int = 30
    windows_per_session: int = 40
    label_noise_std: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("dimension must be at least 2")
        if not 0 < self.signal_fraction <= 1:
            raise ValueError("signal_fraction must lie in (0, 1]")
        if self.n_participants < 1:
            raise ValueError("n_participants must be at least 1")
        if self.windows_per_session < 2:
            raise ValueError("windows_per_session must be at least 2")
        if self.label_noise_std < 0:
            raise ValueError("label_noise_std must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def signal_count(self) -> int:
        return max(1, round(self.dimension * self.signal_fraction))

    def signal_indices(self) -> set[int]:
        return set(range(self.signal_count))

    def noise_indices(self) -> set[int]:
        return set(range(self.signal_count, self.dimension))


def true_weights(spec: SyntheticSpec) -> LinearRanker:
    """Sparse ground-truth ranker, scaled to unit norm.

    The scale is cosmetic: per-session min-max normalization of the latent
    score makes labels invariant to any positive rescaling of the weights."""
    rng = np.random.default_rng([spec.seed, _WEIGHTS_STREAM])
    raw = rng.normal(0.0, 1.0, size=spec.signal_count)
    raw /= np.linalg.norm(raw)
    return LinearRanker(dimension=spec.dimension,
                        weights={i: float(w) for i, w in enumerate(raw)})


def _session(spec: SyntheticSpec, truth: LinearRanker, index: int,
             stream: int) -> WindowedSession:
    rng = np.random.default_rng([spec.seed, stream, index])
    features = rng.normal(size=(spec.windows_per_session, spec.dimension))
    latent = features @ truth.as_dense()
    lo, hi = latent.min(), latent.max()
    if hi == lo:
        raise ConstantTraceError(f"synthetic session {index} has a constant latent score")
    labels = (latent - lo) / (hi - lo)
    if spec.label_noise_std > 0:
        noisy = labels + rng.normal(0.0, spec.label_noise_std,
                                    size=spec.windows_per_session)
        lo, hi = noisy.min(), noisy.max()
        if hi == lo:
            raise ConstantTraceError(f"synthetic session {index} collapsed under noise")
        labels = (noisy - lo) / (hi - lo)
    sid = f"s{index:03d}"
    return WindowedSession(
        session_id=sid,
        participant_id=f"p{index:03d}",
        windows=tuple(FeatureWindow(sid, k, features[k])
                      for k in range(spec.windows_per_session)),
        labels=labels,
    )


def generate(spec: SyntheticSpec) -> tuple[list[WindowedSession], LinearRanker]:
    """One session per participant, plus the ground-truth ranker."""
    truth = true_weights(spec)
    sessions = [_session(spec, truth, i, _SESSION_STREAM)
                for i in range(spec.n_participants)]
    return sessions, truth


def to_traces(sessions: list[WindowedSession],
              window_seconds: float = 3.0,
              lag_seconds: float = 1.0) -> list[AnnotationTrace]:
    """Annotation traces that the windowing stage maps back onto the labels.

    One sample per window, placed at window_start + lag so the lag shift
    lands it exactly at the window opening.
    """
    traces = []
    for session in sessions:
        times = np.array([w.window_index * window_seconds + lag_seconds
                          for w in session.windows])
        traces.append(AnnotationTrace(
            session_id=session.session_id,
            participant_id=session.participant_id,
            times=times,
            values=session.labels,
        ))
    return traces


def write_corpus(sessions: list[WindowedSession], features_path, annotations_path,
                 window_seconds: float = 3.0, lag_seconds: float = 1.0) -> None:
    """Serialize sessions into the two CSV files the ingestion stage reads."""
    write_features_csv(sessions, features_path)
    write_annotations_csv(to_traces(sessions, window_seconds, lag_seconds),
                          annotations_path)


def bayes_accuracy(spec: SyntheticSpec, preference_threshold: float,
                   n_mc: int = 20000) -> float:
    """Monte-Carlo pair accuracy of the ground-truth ranker on fresh data.

    Sessions are drawn from a stream disjoint from generate()'s, so the
    estimate never touches the corpus a model was trained on. This is the
    in-expectation ceiling for any trained model.
    """
    if n_mc < 10_000:
        raise ValueError("n_mc must be at least 10_000 for a stable estimate")
    truth = true_weights(spec)
    dense = truth.as_dense()
    credit_sum = 0.0
    n_pairs = 0
    index = 0
    while n_pairs < n_mc:
        session = _session(spec, truth, index, _MONTE_CARLO_STREAM)
        dataset = PairDataset.from_sessions([session], preference_threshold)
        index += 1
        if len(dataset) == 0:
            continue
        z = dataset.diffs() @ dense
        y = dataset.labels()
        credit = np.where(z > 0, y, np.where(z < 0, 1.0 - y, 0.5))
        credit_sum += float(credit.sum())
        n_pairs += len(dataset)
    return credit_sum / n_pairs
