"""Synthetic benchmark generation.

Instances follow a fixed recipe: a signed Erdos-Renyi network (each edge
positive or negative with equal probability), a random opportunity
partition, rates drawn from disjoint uniform ranges, and one simulated
count matrix.  The difficulty axis is the fraction of signed edges whose
endpoints share a group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ModelState,
    ObservationMatrix,
    ObservationSet,
    Partition,
    PeriodParams,
    Priors,
    RateParams,
    SignedNetwork,
    sample_observations,
)


@dataclass
class SynthConfig:
    n: int = 64
    edge_density: float = 0.4
    max_groups: int = 8
    p_pos_range: tuple = (0.8, 0.9)
    p_zero_range: tuple = (0.2, 0.3)
    p_neg_range: tuple = (0.0, 0.1)
    # The q range and t below are extrapolated defaults, chosen so chance
    # encounters stay clearly sparser than even hostile intra-group contact
    # (q well below the p_neg range).
    q_range: tuple = (0.001, 0.01)
    t: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.edge_density <= 1.0:
            raise ValueError("edge_density must lie in [0, 1]")
        if not 1 <= self.max_groups <= self.n:
            raise ValueError("max_groups must lie in [1, n]")
        if self.t < 0:
            raise ValueError("t must be nonnegative")
        ranges = (self.p_neg_range, self.p_zero_range, self.p_pos_range)
        for lo, hi in ranges + (self.q_range,):
            if not (0.0 <= lo < hi <= 1.0):
                raise ValueError("each rate range needs 0 <= lo < hi <= 1")
        if not (
            self.p_neg_range[1] <= self.p_zero_range[0]
            and self.p_zero_range[1] <= self.p_pos_range[0]
        ):
            raise ValueError("rate ranges must be ordered so any draw is ordered")


@dataclass
class SynthInstance:
    network: SignedNetwork
    partition: Partition
    rates: RateParams
    observation: ObservationMatrix


def generate_signed_er(config: SynthConfig, rng: np.random.Generator) -> SignedNetwork:
    """Signed Erdos-Renyi draw: edges at the configured density, signs fair."""
    n = config.n
    iu, ju = np.triu_indices(n, 1)
    edge = rng.random(iu.size) < config.edge_density
    sign = np.where(rng.random(iu.size) < 0.5, 1, -1)
    vals = np.where(edge, sign, 0).astype(np.int8)
    signs = np.zeros((n, n), dtype=np.int8)
    signs[iu, ju] = vals
    signs[ju, iu] = vals
    return SignedNetwork(signs)


def _assign_groups(n: int, k: int, rng: np.random.Generator) -> Partition:
    # Uniform assignment conditioned on all k groups being occupied;
    # rejection is cheap at the configured scales.
    while True:
        labels = rng.integers(1, k + 1, size=n)
        if len(np.unique(labels)) == k:
            return Partition(labels)


def generate_partition(n: int, max_groups: int, rng: np.random.Generator) -> Partition:
    """Group-count uniform on {1..max_groups}, nodes assigned uniformly,
    resampled until no group is empty."""
    if max_groups > n:
        raise ValueError("max_groups cannot exceed n")
    k = int(rng.integers(1, max_groups + 1))
    return _assign_groups(n, k, rng)


def generate_rates(config: SynthConfig, rng: np.random.Generator) -> RateParams:
    """Independent uniform draws from the configured, mutually ordered ranges."""
    p_pos = rng.uniform(*config.p_pos_range)
    p_zero = rng.uniform(*config.p_zero_range)
    p_neg = rng.uniform(*config.p_neg_range)
    q = rng.uniform(*config.q_range)
    if p_neg <= 0.0:  # keep the open-interval invariant at the range edge
        p_neg = np.nextafter(config.p_neg_range[0], 1.0)
    return RateParams(p_neg, p_zero, p_pos, q)


def generate_instance(
    config: SynthConfig, rng: np.random.Generator, groups: int | None = None
) -> SynthInstance:
    """Compose network, partition, rates, and one simulated count matrix.

    ``groups`` pins the number of groups exactly (used when sweeping the
    internal edge fraction); by default the count is drawn uniformly.
    """
    network = generate_signed_er(config, rng)
    if groups is None:
        partition = generate_partition(config.n, config.max_groups, rng)
    else:
        partition = _assign_groups(config.n, groups, rng)
    rates = generate_rates(config, rng)
    obs = sample_observations(network, partition, rates, config.t, rng)
    return SynthInstance(network, partition, rates, obs)


def internal_edge_fraction(network: SignedNetwork, partition: Partition) -> float:
    """Share of signed pairs whose endpoints share a group; 0 if no edges."""
    iu, ju = np.triu_indices(network.n, 1)
    edges = network.signs[iu, ju] != 0
    if not edges.any():
        return 0.0
    same = partition.labels[iu] == partition.labels[ju]
    return float(np.mean(same[edges]))


# ---------------------------------------------------------------------------
# Exact draws from the model prior (used for calibration studies)


def _bell_numbers(n: int) -> list[int]:
    bell = [1] * (n + 1)
    for m in range(1, n + 1):
        bell[m] = sum(math.comb(m - 1, k) * bell[m - 1 - k] for k in range(m))
    return bell


def uniform_partition(n: int, rng: np.random.Generator) -> Partition:
    """Exactly uniform draw over all set partitions of n nodes.

    Recursively picks the block containing the lowest remaining node with
    probability proportional to C(m-1, k) * B(m-1-k), which reproduces the
    uniform distribution over partitions.
    """
    bell = _bell_numbers(n)
    remaining = list(range(n))
    labels = np.zeros(n, dtype=np.int64)
    group = 0
    while remaining:
        group += 1
        m = len(remaining)
        weights = np.array(
            [math.comb(m - 1, k) * bell[m - 1 - k] for k in range(m)], dtype=float
        )
        k = int(rng.choice(m, p=weights / weights.sum()))
        anchor, rest = remaining[0], remaining[1:]
        chosen = rng.choice(m - 1, size=k, replace=False) if k else np.empty(0, int)
        block = {anchor} | {rest[c] for c in chosen}
        for node in block:
            labels[node] = group
        remaining = [v for v in rest if v not in block]
    return Partition(labels)


def prior_rates(rng: np.random.Generator) -> RateParams:
    """Rates from the model prior: sorted uniforms for the ordered triple,
    a free uniform for the chance rate."""
    triple = np.sort(rng.random(3))
    while not (0.0 < triple[0] < triple[1] < triple[2] < 1.0):
        triple = np.sort(rng.random(3))
    q = rng.uniform(1e-9, 1.0 - 1e-9)
    return RateParams(float(triple[0]), float(triple[1]), float(triple[2]), q)


def sample_prior_instance(
    n: int,
    trials: list[int],
    rng: np.random.Generator,
    priors: Priors | None = None,
) -> tuple[ModelState, ObservationSet]:
    """Draw a full latent state and matching observations from the model."""
    if priors is None:
        priors = Priors()
    iu, ju = np.triu_indices(n, 1)
    vals = (rng.choice(3, size=iu.size, p=priors.rho) - 1).astype(np.int8)
    signs = np.zeros((n, n), dtype=np.int8)
    signs[iu, ju] = vals
    signs[ju, iu] = vals
    network = SignedNetwork(signs)
    periods = []
    matrices = []
    for t in trials:
        partition = uniform_partition(n, rng)
        rates = prior_rates(rng)
        periods.append(PeriodParams(partition, rates))
        matrices.append(sample_observations(network, partition, rates, t, rng))
    return ModelState(network, periods), ObservationSet(matrices)
