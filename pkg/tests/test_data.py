"""Pipeline tests: normalization, windowing, pair construction, ingestion."""

import logging

import numpy as np
import pytest

from rankneat.data import (
    AnnotationTrace,
    PairDataset,
    build_pairs,
    dataset_volume_ratio,
    ingest,
    normalize_trace,
    window_labels,
    write_annotations_csv,
    write_features_csv,
)
from rankneat.errors import (
    ConstantTraceError,
    DimensionMismatchError,
    EmptyResultError,
    MissingSessionError,
    ParseError,
)
from rankneat.synthetic import SyntheticSpec, generate, to_traces

from conftest import make_session


def trace_of(values, session_id="s", participant_id="p"):
    values = np.asarray(values, dtype=float)
    return AnnotationTrace(session_id, participant_id,
                           times=np.arange(values.size, dtype=float),
                           values=values)


class TestNormalizeTrace:
    def test_affine_endpoints(self):
        out = normalize_trace(trace_of([2, 4, 6]))
        np.testing.assert_allclose(out.values, [0.0, 0.5, 1.0])

    def test_negative_min(self):
        out = normalize_trace(trace_of([-1, 0, 3]))
        np.testing.assert_allclose(out.values, [0.0, 0.25, 1.0])

    def test_constant_trace_rejected(self):
        with pytest.raises(ConstantTraceError):
            normalize_trace(trace_of([5, 5, 5]))

    def test_order_preserved(self):
        out = normalize_trace(trace_of([3, 1, 2]))
        assert out.values.argmin() == 1 and out.values.argmax() == 0

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            trace = trace_of(rng.normal(size=rng.integers(2, 30)) * 10)
            if trace.values.max() == trace.values.min():
                continue
            once = normalize_trace(trace)
            twice = normalize_trace(once)
            np.testing.assert_array_equal(once.values, twice.values)

    def test_requires_two_samples(self):
        with pytest.raises(ValueError):
            AnnotationTrace("s", "p", times=np.array([0.0]), values=np.array([1.0]))

    def test_requires_increasing_times(self):
        with pytest.raises(ValueError):
            AnnotationTrace("s", "p", times=np.array([0.0, 0.0]),
                            values=np.array([1.0, 2.0]))


def enumerate_window_means(times, values, window_seconds, lag_seconds):
    """Independent oracle: assign each shifted sample to its window, average."""
    buckets = {}
    for t, v in zip(times, values):
        shifted = t - lag_seconds
        k = 0
        if shifted < 0:
            continue
        while not (k * window_seconds <= shifted < (k + 1) * window_seconds):
            k += 1
        buckets.setdefault(k, []).append(v)
    return {k: sum(vs) / len(vs) for k, vs in buckets.items()}


class TestWindowLabels:
    times = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
    values = [0.0, 0.0, 0.6, 0.6, 0.6, 0.6]

    def test_means_of_thirds_no_lag(self):
        out = window_labels(self.times, self.values, window_seconds=3.0, lag_seconds=0.0)
        assert out == pytest.approx({0: 0.2, 1: 0.6})

    def test_lag_shifts_membership(self):
        # Shifted times are -1..4: the t=0 sample drops out, window 0 averages
        # the samples at original t=1,2,3 and window 1 those at t=4,5.
        out = window_labels(self.times, self.values, window_seconds=3.0, lag_seconds=1.0)
        oracle = enumerate_window_means(self.times, self.values, 3.0, 1.0)
        assert out == pytest.approx(oracle)
        assert out == pytest.approx({0: 0.4, 1: 0.6})

    def test_single_sample_single_window(self):
        out = window_labels([0.0], [0.7], window_seconds=3.0, lag_seconds=0.0)
        assert out == pytest.approx({0: 0.7})

    def test_all_samples_before_first_window(self):
        with pytest.raises(EmptyResultError):
            window_labels([0.0, 0.5], [0.1, 0.2], window_seconds=3.0, lag_seconds=2.0)

    def test_gap_windows_are_absent(self):
        out = window_labels([0.5, 7.0], [0.2, 0.8], window_seconds=3.0, lag_seconds=0.0)
        assert sorted(out) == [0, 2]

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            times = np.sort(rng.uniform(0, 60, size=n))
            values = rng.uniform(0, 1, size=n)
            w = float(rng.uniform(0.5, 5.0))
            lag = float(rng.uniform(0.0, 3.0))
            oracle = enumerate_window_means(times, values, w, lag)
            if not oracle:
                continue
            assert window_labels(times, values, w, lag) == pytest.approx(oracle)


def enumerate_pairs(labels, threshold):
    """Independent oracle: check every ordered index pair against the rule."""
    out = set()
    for i in range(len(labels)):
        for j in range(len(labels)):
            if i == j:
                continue
            if labels[i] - labels[j] > threshold:
                out.add((i, j, 1))
            elif labels[j] - labels[i] > threshold:
                out.add((i, j, 0))
    return out


class TestBuildPairs:
    def test_three_labels_six_pairs(self):
        session = make_session([0.0, 0.5, 1.0])
        pairs = build_pairs(session, 0.25)
        got = {(p.first_index, p.second_index, p.label) for p in pairs}
        assert got == {(0, 1, 0), (1, 0, 1), (0, 2, 0), (2, 0, 1), (1, 2, 0), (2, 1, 1)}
        assert len(pairs) == 6

    def test_gap_below_threshold_skipped(self):
        assert build_pairs(make_session([0.4, 0.5]), 0.25) == []

    def test_single_qualifying_pair(self):
        pairs = build_pairs(make_session([0.0, 1.0]), 0.5)
        got = [(p.first_index, p.second_index, p.label) for p in pairs]
        assert got == [(0, 1, 0), (1, 0, 1)]

    def test_boundary_equality_excluded(self):
        assert build_pairs(make_session([0.0, 0.5]), 0.5) == []

    def test_threshold_must_be_in_open_interval(self):
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                build_pairs(make_session([0.0, 1.0]), bad)

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            labels = rng.uniform(0, 1, size=int(rng.integers(2, 15)))
            threshold = float(rng.uniform(0.05, 0.9))
            got = {(p.first_index, p.second_index, p.label)
                   for p in build_pairs(make_session(labels), threshold)}
            assert got == enumerate_pairs(labels, threshold)


class TestPairDatasetProperties:
    thresholds = (0.15, 0.25, 0.5)

    def corpora(self, count=10):
        for i in range(count):
            spec = SyntheticSpec(dimension=6, signal_fraction=0.5,
                                 n_participants=3, windows_per_session=10,
                                 label_noise_std=0.3, seed=100 + i)
            yield generate(spec)[0]

    def test_exact_balance(self):
        for sessions in self.corpora():
            for pt in self.thresholds:
                labels = PairDataset.from_sessions(sessions, pt).labels()
                assert (labels == 1).sum() == (labels == 0).sum()

    def test_orientation_closure(self):
        for sessions in self.corpora():
            dataset = PairDataset.from_sessions(sessions, 0.25)
            seen = {(p.session_id, p.first_index, p.second_index, p.label)
                    for p in dataset.pairs}
            for sid, i, j, y in seen:
                assert (sid, j, i, 1 - y) in seen

    def test_monotone_volume(self):
        for sessions in self.corpora():
            counts = [len(PairDataset.from_sessions(sessions, pt))
                      for pt in self.thresholds]
            assert counts == sorted(counts, reverse=True)

    def test_intra_session_closure(self):
        for sessions in self.corpora(3):
            dataset = PairDataset.from_sessions(sessions, 0.15)
            for pair in dataset.pairs:
                session = dataset.sessions[pair.session_id]
                assert 0 <= pair.first_index < len(session.windows)
                assert 0 <= pair.second_index < len(session.windows)

    def test_label_bounds(self):
        for sessions in self.corpora(3):
            for session in sessions:
                assert session.labels.min() >= 0.0
                assert session.labels.max() <= 1.0


class TestVolumeRatio:
    def test_hand_computed_ratio(self):
        sessions = [make_session([0.0, 0.5, 1.0])]
        # only the {0,2} pair survives 0.5, all three survive 0.25
        assert dataset_volume_ratio(sessions, 0.5, 0.25) == pytest.approx(1 / 3)

    def test_identical_thresholds(self):
        sessions = [make_session([0.0, 0.5, 1.0])]
        assert dataset_volume_ratio(sessions, 0.25, 0.25) == 1.0

    def test_empty_denominator(self):
        sessions = [make_session([0.4, 0.5])]
        with pytest.raises(ZeroDivisionError):
            dataset_volume_ratio(sessions, 0.2, 0.3)


class TestIngest:
    def write_corpus(self, tmp_path, sessions):
        features = tmp_path / "features.csv"
        annotations = tmp_path / "annotations.csv"
        write_features_csv(sessions, features)
        write_annotations_csv(to_traces(sessions), annotations)
        return features, annotations

    def test_two_sessions_round_trip(self, tmp_path, small_corpus):
        sessions = small_corpus[0][:2]
        features, annotations = self.write_corpus(tmp_path, sessions)
        out = ingest(features, annotations)
        assert [s.session_id for s in out] == [s.session_id for s in sessions]
        for got, want in zip(out, sessions):
            assert got.participant_id == want.participant_id
            np.testing.assert_array_equal(got.labels, want.labels)
            np.testing.assert_array_equal(got.feature_matrix(), want.feature_matrix())

    def test_constant_trace_dropped_and_logged(self, tmp_path, small_corpus, caplog):
        sessions = list(small_corpus[0][:2])
        features = tmp_path / "features.csv"
        annotations = tmp_path / "annotations.csv"
        write_features_csv(sessions, features)
        traces = to_traces(sessions)
        flat = traces[0]
        traces[0] = AnnotationTrace(flat.session_id, flat.participant_id,
                                    flat.times, np.full_like(flat.values, 0.5))
        write_annotations_csv(traces, annotations)
        with caplog.at_level(logging.INFO):
            out = ingest(features, annotations)
        assert [s.session_id for s in out] == [sessions[1].session_id]
        assert any("dropping session" in rec.message for rec in caplog.records)

    def test_dimension_mismatch(self, tmp_path):
        features = tmp_path / "features.csv"
        features.write_text(
            "session_id,participant_id,window_index,f0,f1,f2,f3\n"
            "a,p1,0,1,2,3,4\n"
            "a,p1,1,1,2,3,4,5\n"
        )
        annotations = tmp_path / "annotations.csv"
        annotations.write_text("session_id,time_seconds,value\na,1.0,0.1\na,4.0,0.9\n")
        with pytest.raises(DimensionMismatchError):
            ingest(features, annotations)

    def test_missing_session(self, tmp_path):
        features = tmp_path / "features.csv"
        features.write_text(
            "session_id,participant_id,window_index,f0\n"
            "a,p1,0,1.0\nb,p2,0,2.0\n"
        )
        annotations = tmp_path / "annotations.csv"
        annotations.write_text("session_id,time_seconds,value\na,1.0,0.1\na,4.0,0.9\n")
        with pytest.raises(MissingSessionError):
            ingest(features, annotations)

    def test_malformed_row(self, tmp_path):
        features = tmp_path / "features.csv"
        features.write_text(
            "session_id,participant_id,window_index,f0\n"
            "a,p1,zero,1.0\n"
        )
        annotations = tmp_path / "annotations.csv"
        annotations.write_text("session_id,time_seconds,value\na,1.0,0.1\na,4.0,0.9\n")
        with pytest.raises(ParseError):
            ingest(features, annotations)

    def test_bad_header(self, tmp_path):
        features = tmp_path / "features.csv"
        features.write_text("who,what,when,f0\na,p1,0,1.0\n")
        annotations = tmp_path / "annotations.csv"
        annotations.write_text("session_id,time_seconds,value\na,1.0,0.1\n")
        with pytest.raises(ParseError):
            ingest(features, annotations)
