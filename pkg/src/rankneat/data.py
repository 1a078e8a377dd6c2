"""Session ingestion, annotation windowing and preference-pair construction.

The pipeline turns per-session annotation traces plus precomputed feature
vectors into a balanced binary dataset of ordered window pairs:

  1. min-max normalize each trace to [0, 1],
  2. shift annotation timestamps back by the reaction-time lag and average
     them into fixed-length windows,
  3. align window labels with feature windows by index,
  4. for every intra-session window pair whose label difference exceeds the
     preference threshold, emit both orientations with complementary labels.

Emitting both orientations makes the dataset exactly balanced by
construction and symmetric under orientation swap.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConstantTraceError,
    DimensionMismatchError,
    EmptyResultError,
    MissingSessionError,
    ParseError,
)

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_SECONDS = 3.0
DEFAULT_LAG_SECONDS = 1.0


@dataclass(frozen=True)
class AnnotationTrace:
    """Raw per-session annotation time series (unbounded values)."""

    session_id: str
    participant_id: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if times.size < 2:
            raise ValueError(
                f"trace {self.session_id!r} needs at least 2 samples, got {times.size}"
            )
        if not np.all(np.diff(times) > 0):
            raise ValueError(f"trace {self.session_id!r} timestamps must strictly increase")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"trace {self.session_id!r} has non-finite values")


@dataclass(frozen=True)
class FeatureWindow:
    """One precomputed feature vector for a fixed-length gameplay window."""

    session_id: str
    window_index: int
    features: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        object.__setattr__(self, "features", features)
        if features.ndim != 1:
            raise ValueError("features must be a 1-d vector")
        if not np.all(np.isfinite(features)):
            raise ValueError(
                f"window {self.window_index} of session {self.session_id!r} "
                "has non-finite features"
            )
        if self.window_index < 0:
            raise ValueError("window_index must be >= 0")


@dataclass(frozen=True)
class WindowedSession:
    """Feature windows of one session paired with normalized window labels."""

    session_id: str
    participant_id: str
    windows: tuple[FeatureWindow, ...]
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=float)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "windows", tuple(self.windows))
        if len(self.windows) != labels.size:
            raise ValueError("windows and labels must align one-to-one")
        if labels.size and (labels.min() < 0.0 or labels.max() > 1.0):
            raise ValueError(f"labels of session {self.session_id!r} outside [0, 1]")
        dims = {w.features.size for w in self.windows}
        if len(dims) > 1:
            raise DimensionMismatchError(
                f"session {self.session_id!r} mixes feature dimensions {sorted(dims)}"
            )

    @property
    def dimension(self) -> int:
        return self.windows[0].features.size if self.windows else 0

    def feature_matrix(self) -> np.ndarray:
        if not self.windows:
            return np.zeros((0, 0))
        return np.stack([w.features for w in self.windows])


@dataclass(frozen=True)
class PreferencePair:
    """Ordered intra-session pair: label 1 means the first window is preferred."""

    session_id: str
    first_index: int
    second_index: int
    label: int

    def __post_init__(self):
        if self.first_index == self.second_index:
            raise ValueError("a pair must reference two distinct windows")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


def normalize_trace(trace: AnnotationTrace) -> AnnotationTrace:
    """Min-max normalize trace values to [0, 1], preserving sample order."""
    lo = float(trace.values.min())
    hi = float(trace.values.max())
    if hi == lo:
        raise ConstantTraceError(
            f"trace {trace.session_id!r} is constant (value {lo}); no signal to rank"
        )
    return AnnotationTrace(
        session_id=trace.session_id,
        participant_id=trace.participant_id,
        times=trace.times,
        values=(trace.values - lo) / (hi - lo),
    )


def window_labels(times: Sequence[float], values: Sequence[float],
                  window_seconds: float = DEFAULT_WINDOW_SECONDS,
                  lag_seconds: float = DEFAULT_LAG_SECONDS) -> dict[int, float]:
    """Average annotation samples into fixed-length windows.

    Each sample's timestamp is shifted back by ``lag_seconds`` (an annotation
    at time t reflects the stimulus at t - lag); window k then averages the
    samples whose shifted time falls in [k*W, (k+1)*W). Windows without any
    sample are absent from the result rather than zero-filled.
    """
    if window_seconds <= 0:
        raise ValueError("window_seconds must be positive")
    if lag_seconds < 0:
        raise ValueError("lag_seconds must be non-negative")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    shifted = times - lag_seconds
    indices = np.floor(shifted / window_seconds).astype(int)
    keep = indices >= 0
    if not np.any(keep):
        raise EmptyResultError("no window contains any annotation sample")
    labels: dict[int, float] = {}
    for k in np.unique(indices[keep]):
        labels[int(k)] = float(values[indices == k].mean())
    return labels


def build_pairs(session: WindowedSession, preference_threshold: float) -> list[PreferencePair]:
    """Emit both orientations of every pair whose label gap exceeds the threshold.

    Equality with the threshold does not qualify: the threshold is a strict
    significance bar. The two orientations carry complementary labels, which
    keeps the dataset exactly balanced.
    """
    if not 0 < preference_threshold < 1:
        raise ValueError(f"preference threshold must lie in (0, 1), got {preference_threshold}")
    labels = session.labels
    pairs: list[PreferencePair] = []
    n = len(labels)
    sid = session.session_id
    for i in range(n):
        for j in range(i + 1, n):
            gap = labels[i] - labels[j]
            if abs(gap) <= preference_threshold:
                continue
            forward = 1 if gap > preference_threshold else 0
            pairs.append(PreferencePair(sid, i, j, forward))
            pairs.append(PreferencePair(sid, j, i, 1 - forward))
    return pairs


class PairDataset:
    """Preference pairs over a set of sessions, with cached vector views."""

    def __init__(self, pairs: list[PreferencePair], threshold: float,
                 sessions: Mapping[str, WindowedSession]):
        self.pairs = pairs
        self.threshold = threshold
        self.sessions = dict(sessions)
        for pair in pairs:
            session = self.sessions.get(pair.session_id)
            if session is None:
                raise ValueError(f"pair references unknown session {pair.session_id!r}")
            if not (0 <= pair.first_index < len(session.windows)
                    and 0 <= pair.second_index < len(session.windows)):
                raise ValueError(
                    f"pair ({pair.first_index}, {pair.second_index}) outside "
                    f"session {pair.session_id!r}"
                )
        self._diffs: np.ndarray | None = None
        self._labels: np.ndarray | None = None

    @classmethod
    def from_sessions(cls, sessions: Iterable[WindowedSession],
                      preference_threshold: float) -> "PairDataset":
        """Build pairs for every session, merged in session_id order."""
        by_id = {s.session_id: s for s in sessions}
        pairs: list[PreferencePair] = []
        for sid in sorted(by_id):
            pairs.extend(build_pairs(by_id[sid], preference_threshold))
        return cls(pairs, preference_threshold, by_id)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def dimension(self) -> int:
        for session in self.sessions.values():
            if session.windows:
                return session.dimension
        return 0

    def _materialize(self) -> None:
        if self._diffs is not None:
            return
        matrices = {sid: s.feature_matrix() for sid, s in self.sessions.items()}
        d = self.dimension
        diffs = np.zeros((len(self.pairs), d))
        labels = np.zeros(len(self.pairs))
        for row, pair in enumerate(self.pairs):
            m = matrices[pair.session_id]
            diffs[row] = m[pair.first_index] - m[pair.second_index]
            labels[row] = pair.label
        self._diffs = diffs
        self._labels = labels

    def diffs(self) -> np.ndarray:
        """Matrix of x_i - x_j rows, one per pair."""
        self._materialize()
        return self._diffs

    def labels(self) -> np.ndarray:
        self._materialize()
        return self._labels

    def feature_pair(self, row: int) -> tuple[np.ndarray, np.ndarray, int]:
        pair = self.pairs[row]
        m = self.sessions[pair.session_id].feature_matrix()
        return m[pair.first_index], m[pair.second_index], pair.label


def dataset_volume_ratio(sessions: Iterable[WindowedSession],
                         threshold_a: float, threshold_b: float) -> float:
    """Pair count at threshold_a divided by pair count at threshold_b."""
    sessions = list(sessions)
    numer = len(PairDataset.from_sessions(sessions, threshold_a))
    denom = len(PairDataset.from_sessions(sessions, threshold_b))
    if denom == 0:
        raise ZeroDivisionError(
            f"no pairs at threshold {threshold_b}; ratio is undefined"
        )
    return numer / denom


# ---------------------------------------------------------------------------
# CSV interfaces
#
# features file:    session_id,participant_id,window_index,f0,...,f{d-1}
# annotations file: session_id,time_seconds,value
# ---------------------------------------------------------------------------

def read_features_csv(path) -> dict[str, tuple[str, dict[int, np.ndarray]]]:
    """Parse the features file into session_id -> (participant_id, windows)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty features file") from None
        if header[:3] != ["session_id", "participant_id", "window_index"]:
            raise ParseError(f"{path}: unexpected features header {header[:3]}")
        feature_names = header[3:]
        d = len(feature_names)
        if feature_names != [f"f{i}" for i in range(d)]:
            raise ParseError(f"{path}: feature columns must be f0..f{d - 1}")
        if d == 0:
            raise ParseError(f"{path}: features file declares no feature columns")

        sessions: dict[str, tuple[str, dict[int, np.ndarray]]] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3 + d:
                raise DimensionMismatchError(
                    f"{path}:{line_no}: expected {d} feature values, got {len(row) - 3}"
                )
            sid, pid = row[0], row[1]
            try:
                index = int(row[2])
                vector = np.array([float(v) for v in row[3:]])
            except ValueError as exc:
                raise ParseError(f"{path}:{line_no}: {exc}") from None
            participant, windows = sessions.setdefault(sid, (pid, {}))
            if participant != pid:
                raise ParseError(
                    f"{path}:{line_no}: session {sid!r} maps to multiple participants"
                )
            if index in windows:
                raise ParseError(f"{path}:{line_no}: duplicate window {index} in {sid!r}")
            windows[index] = vector
    return sessions


def read_annotations_csv(path) -> dict[str, list[tuple[float, float]]]:
    """Parse the annotations file into session_id -> [(time, value), ...]."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty annotations file") from None
        if header != ["session_id", "time_seconds", "value"]:
            raise ParseError(f"{path}: unexpected annotations header {header}")
        samples: dict[str, list[tuple[float, float]]] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{line_no}: expected 3 columns, got {len(row)}")
            try:
                t, v = float(row[1]), float(row[2])
            except ValueError as exc:
                raise ParseError(f"{path}:{line_no}: {exc}") from None
            samples.setdefault(row[0], []).append((t, v))
    return samples


def write_features_csv(sessions: Iterable[WindowedSession], path) -> None:
    sessions = list(sessions)
    dims = {s.dimension for s in sessions if s.windows}
    if len(dims) > 1:
        raise DimensionMismatchError(f"sessions mix feature dimensions {sorted(dims)}")
    d = dims.pop() if dims else 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("session_id,participant_id,window_index,"
                 + ",".join(f"f{i}" for i in range(d)) + "\n")
        for session in sorted(sessions, key=lambda s: s.session_id):
            for window in session.windows:
                values = ",".join(repr(float(v)) for v in window.features)
                fh.write(f"{session.session_id},{session.participant_id},"
                         f"{window.window_index},{values}\n")


def write_annotations_csv(traces: Iterable[AnnotationTrace], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("session_id,time_seconds,value\n")
        for trace in sorted(traces, key=lambda t: t.session_id):
            for t, v in zip(trace.times, trace.values):
                fh.write(f"{trace.session_id},{float(t)!r},{float(v)!r}\n")


def ingest(features_path, annotations_path,
           window_seconds: float = DEFAULT_WINDOW_SECONDS,
           lag_seconds: float = DEFAULT_LAG_SECONDS) -> list[WindowedSession]:
    """Assemble, normalize, window and align sessions from the two CSV files.

    Sessions that fail normalization (constant trace, too few samples) or
    alignment (no window carries both features and a label) are dropped with
    a logged reason. A session present in only one of the files is an error.
    """
    features = read_features_csv(features_path)
    annotations = read_annotations_csv(annotations_path)

    dims = {vec.size for _, windows in features.values() for vec in windows.values()}
    if len(dims) > 1:
        raise DimensionMismatchError(f"feature rows mix dimensions {sorted(dims)}")

    only_features = sorted(set(features) - set(annotations))
    only_annotations = sorted(set(annotations) - set(features))
    if only_features or only_annotations:
        raise MissingSessionError(
            f"sessions without annotations: {only_features}; "
            f"sessions without features: {only_annotations}"
        )

    sessions: list[WindowedSession] = []
    for sid in sorted(features):
        participant, windows = features[sid]
        samples = sorted(annotations[sid])
        times = np.array([t for t, _ in samples])
        values = np.array([v for _, v in samples])
        if times.size >= 2 and not np.all(np.diff(times) > 0):
            raise ParseError(f"session {sid!r}: duplicate annotation timestamps")

        if times.size < 2:
            logger.info("dropping session %r: fewer than 2 annotation samples", sid)
            continue
        trace = AnnotationTrace(sid, participant, times, values)
        try:
            trace = normalize_trace(trace)
        except ConstantTraceError as exc:
            logger.info("dropping session %r: %s", sid, exc)
            continue
        try:
            labels = window_labels(trace.times, trace.values, window_seconds, lag_seconds)
        except EmptyResultError as exc:
            logger.info("dropping session %r: %s", sid, exc)
            continue

        shared = sorted(set(labels) & set(windows))
        if not shared:
            logger.info("dropping session %r: no window has both features and a label", sid)
            continue
        sessions.append(WindowedSession(
            session_id=sid,
            participant_id=participant,
            windows=tuple(FeatureWindow(sid, k, windows[k]) for k in shared),
            labels=np.array([labels[k] for k in shared]),
        ))
    return sessions
