import numpy as np
import pytest

from rankneat.data import FeatureWindow, WindowedSession
from rankneat.synthetic import SyntheticSpec, generate


def make_session(labels, dimension=3, session_id="s000", participant_id="p000",
                 seed=0):
    """Hand-rolled session with the given window labels and random features."""
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels, dtype=float)
    windows = tuple(
        FeatureWindow(session_id, k, rng.normal(size=dimension))
        for k in range(labels.size)
    )
    return WindowedSession(session_id=session_id, participant_id=participant_id,
                           windows=windows, labels=labels)


@pytest.fixture(scope="session")
def small_spec():
    return SyntheticSpec(dimension=8, signal_fraction=0.5, n_participants=6,
                         windows_per_session=12, label_noise_std=0.1, seed=5)


@pytest.fixture(scope="session")
def small_corpus(small_spec):
    return generate(small_spec)


@pytest.fixture(scope="session")
def noiseless_corpus():
    spec = SyntheticSpec(dimension=6, signal_fraction=1.0, n_participants=4,
                         windows_per_session=10, label_noise_std=0.0, seed=11)
    return generate(spec)
