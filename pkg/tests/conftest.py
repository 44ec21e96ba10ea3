import numpy as np
import pytest

from signedties.model import (
    ModelState,
    ObservationMatrix,
    ObservationSet,
    Partition,
    PeriodParams,
    RateParams,
    SignedNetwork,
    log_posterior,
)


def make_network(n, entries):
    """Build a SignedNetwork from {(i, j): sign} upper-triangle entries."""
    signs = np.zeros((n, n), dtype=np.int8)
    for (i, j), s in entries.items():
        signs[i, j] = signs[j, i] = s
    return SignedNetwork(signs)


def make_obs(n, t, entries):
    """Build an ObservationMatrix from {(i, j): count} entries."""
    counts = np.zeros((n, n), dtype=np.int64)
    for (i, j), c in entries.items():
        counts[i, j] = counts[j, i] = c
    return ObservationMatrix(counts, t)


def contiguous_labels(raw):
    mapping = {}
    return np.array([mapping.setdefault(v, len(mapping) + 1) for v in raw])


def random_state(rng, n, obs, lo=0.05, hi=0.95):
    """Random valid state for the given observations, log-posterior cached."""
    iu, ju = np.triu_indices(n, 1)
    signs = np.zeros((n, n), dtype=np.int8)
    vals = rng.integers(-1, 2, iu.size).astype(np.int8)
    signs[iu, ju] = vals
    signs[ju, iu] = vals
    periods = []
    for _ in range(len(obs)):
        labels = contiguous_labels(rng.integers(1, min(n, 3) + 1, n).tolist())
        triple = np.sort(rng.uniform(lo, hi, 3))
        while not triple[0] < triple[1] < triple[2]:
            triple = np.sort(rng.uniform(lo, hi, 3))
        rates = RateParams(*triple, rng.uniform(lo, hi))
        periods.append(PeriodParams(Partition(labels), rates))
    state = ModelState(SignedNetwork(signs), periods)
    state.log_posterior = log_posterior(state, obs)
    return state


def random_obs(rng, n, t, periods=1):
    mats = []
    for _ in range(periods):
        iu, ju = np.triu_indices(n, 1)
        counts = np.zeros((n, n), dtype=np.int64)
        vals = rng.integers(0, t + 1, iu.size)
        counts[iu, ju] = vals
        counts[ju, iu] = vals
        mats.append(ObservationMatrix(counts, t))
    return ObservationSet(mats)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
