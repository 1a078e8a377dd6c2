"""Synthetic generator and its Bayes-optimal reference."""

import numpy as np
import pytest

from rankneat.core import pair_accuracy
from rankneat.data import PairDataset, ingest
from rankneat.synthetic import (
    SyntheticSpec,
    bayes_accuracy,
    generate,
    true_weights,
    write_corpus,
)


class TestGenerate:
    def test_deterministic(self, small_spec):
        first, truth_a = generate(small_spec)
        second, truth_b = generate(small_spec)
        assert truth_a == truth_b
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.labels, b.labels)
            np.testing.assert_array_equal(a.feature_matrix(), b.feature_matrix())

    def test_one_session_per_participant(self, small_corpus):
        sessions, _ = small_corpus
        assert len({s.participant_id for s in sessions}) == len(sessions)

    def test_labels_span_unit_interval(self, small_corpus):
        for session in small_corpus[0]:
            assert session.labels.min() == 0.0
            assert session.labels.max() == 1.0

    def test_truth_is_sparse_on_noise_indices(self, small_spec):
        truth = true_weights(small_spec)
        assert set(truth.weights) == small_spec.signal_indices()
        assert small_spec.signal_indices() | small_spec.noise_indices() == \
            set(range(small_spec.dimension))

    def test_noiseless_oracle_is_perfect(self, noiseless_corpus):
        sessions, truth = noiseless_corpus
        for threshold in (0.15, 0.25, 0.5):
            dataset = PairDataset.from_sessions(sessions, threshold)
            assert pair_accuracy(truth, dataset) == 1.0

    def test_noise_swamped_oracle_is_near_chance(self):
        # Labels are almost pure noise, so even the true weights rank close
        # to the 0.5 baseline.
        for seed in (0, 1, 2):
            spec = SyntheticSpec(dimension=8, signal_fraction=1.0,
                                 n_participants=6, windows_per_session=14,
                                 label_noise_std=100.0, seed=seed)
            sessions, truth = generate(spec)
            dataset = PairDataset.from_sessions(sessions, 0.15)
            assert 0.45 <= pair_accuracy(truth, dataset) <= 0.6


class TestCorpusRoundTrip:
    def test_csv_round_trip_is_exact(self, tmp_path, small_corpus):
        sessions, _ = small_corpus
        features = tmp_path / "features.csv"
        annotations = tmp_path / "annotations.csv"
        write_corpus(sessions, features, annotations)
        again = ingest(features, annotations)
        assert len(again) == len(sessions)
        for got, want in zip(again, sessions):
            assert got.session_id == want.session_id
            assert got.participant_id == want.participant_id
            assert [w.window_index for w in got.windows] == \
                [w.window_index for w in want.windows]
            np.testing.assert_array_equal(got.labels, want.labels)
            np.testing.assert_array_equal(got.feature_matrix(), want.feature_matrix())

    def test_round_trip_with_nondefault_windowing(self, tmp_path, small_corpus):
        sessions, _ = small_corpus
        features = tmp_path / "features.csv"
        annotations = tmp_path / "annotations.csv"
        write_corpus(sessions, features, annotations,
                     window_seconds=2.0, lag_seconds=0.5)
        again = ingest(features, annotations, window_seconds=2.0, lag_seconds=0.5)
        for got, want in zip(again, sessions):
            np.testing.assert_array_equal(got.labels, want.labels)


class TestBayesAccuracy:
    def test_noiseless_ceiling_is_one(self):
        spec = SyntheticSpec(dimension=6, signal_fraction=1.0, n_participants=4,
                             windows_per_session=10, label_noise_std=0.0, seed=11)
        assert bayes_accuracy(spec, 0.25, 10_000) == 1.0

    def test_requires_enough_samples(self, small_spec):
        with pytest.raises(ValueError):
            bayes_accuracy(small_spec, 0.25, 100)

    def test_estimate_is_stable_under_more_samples(self, small_spec):
        first = bayes_accuracy(small_spec, 0.25, 20_000)
        second = bayes_accuracy(small_spec, 0.25, 40_000)
        # two standard errors of the smaller sample
        se = np.sqrt(first * (1 - first) / 20_000)
        assert abs(first - second) < 2 * se + 1e-9

    def test_estimate_is_deterministic(self, small_spec):
        assert bayes_accuracy(small_spec, 0.25, 10_000) == \
            bayes_accuracy(small_spec, 0.25, 10_000)
