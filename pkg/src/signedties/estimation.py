"""Posterior summaries: per-edge sign marginals, point estimates, entropy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampler import SampleSet


@dataclass
class EdgeMarginals:
    """Empirical sign frequencies per unordered pair.

    ``probs[i, j]`` is (P(-1), P(0), P(+1)); each triple sums to 1 and is
    symmetric in (i, j).  Diagonal entries are unused.
    """

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.ndim != 3 or self.probs.shape[2] != 3:
            raise ValueError("probs must have shape (n, n, 3)")

    @property
    def n(self) -> int:
        return self.probs.shape[0]


def edge_marginals(samples: SampleSet) -> EdgeMarginals:
    """Sign frequencies across draws, one triple per pair."""
    if len(samples) == 0:
        raise ValueError("cannot form marginals from an empty sample set")
    stack = np.stack([d.network.signs for d in samples.draws])
    probs = np.stack([(stack == s).mean(axis=0) for s in (-1, 0, 1)], axis=-1)
    probs[np.eye(probs.shape[0], dtype=bool)] = 0.0
    return EdgeMarginals(probs)


def posterior_mean(marginals: EdgeMarginals) -> np.ndarray:
    """Signed expectation per pair, in [-1, 1]: P(+1) - P(-1)."""
    out = marginals.probs[:, :, 2] - marginals.probs[:, :, 0]
    np.fill_diagonal(out, 0.0)
    return out


def edge_entropy(marginals: EdgeMarginals) -> np.ndarray:
    """Entropy of each pair's sign distribution in nats, 0*log(0) := 0.

    Ranges from 0 (certain) to log(3) (uniform over the three signs).
    """
    p = marginals.probs
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    out = -terms.sum(axis=-1)
    np.fill_diagonal(out, 0.0)
    return out
