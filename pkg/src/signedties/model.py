"""Generative model for interaction counts driven by a latent signed network.

Each pair of nodes carries a latent tie sign in {-1, 0, +1}.  During an
observation period the nodes are split into opportunity groups; a pair in
the same group interacts in each of ``t`` recording slots with a
probability set by its tie sign, while a pair in different groups meets
only by chance, at a single background rate.  This module holds the domain
types, every log-density of the model, and forward simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

SIGNS = (-1, 0, 1)


def _check_square_symmetric(arr: np.ndarray, name: str) -> None:
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.array_equal(arr, arr.T):
        raise ValueError(f"{name} must be symmetric")


@dataclass
class SignedNetwork:
    """Symmetric matrix of tie signs in {-1, 0, +1}; the diagonal is unused."""

    signs: np.ndarray

    def __post_init__(self):
        self.signs = np.asarray(self.signs, dtype=np.int8)
        _check_square_symmetric(self.signs, "signs")
        off = self.signs[~np.eye(self.n, dtype=bool)]
        if off.size and not np.isin(off, SIGNS).all():
            raise ValueError("tie signs must lie in {-1, 0, +1}")
        np.fill_diagonal(self.signs, 0)

    @property
    def n(self) -> int:
        return self.signs.shape[0]

    @classmethod
    def empty(cls, n: int) -> "SignedNetwork":
        return cls(np.zeros((n, n), dtype=np.int8))

    def copy(self) -> "SignedNetwork":
        out = object.__new__(SignedNetwork)
        out.signs = self.signs.copy()
        return out


@dataclass
class Partition:
    """Assignment of nodes to opportunity groups, labeled contiguously 1..gamma."""

    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1 or self.labels.size == 0:
            raise ValueError("labels must be a nonempty 1-d vector")
        gamma = int(self.labels.max())
        used = set(np.unique(self.labels).tolist())
        if used != set(range(1, gamma + 1)):
            raise ValueError("group labels must be exactly {1, ..., gamma}")

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def gamma(self) -> int:
        return int(self.labels.max())

    @classmethod
    def single_group(cls, n: int) -> "Partition":
        return cls(np.ones(n, dtype=np.int64))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(np.arange(1, n + 1, dtype=np.int64))

    def canonical(self) -> tuple:
        """Relabel groups by first appearance; identifies equivalent labelings."""
        mapping: dict[int, int] = {}
        out = []
        for lab in self.labels.tolist():
            if lab not in mapping:
                mapping[lab] = len(mapping) + 1
            out.append(mapping[lab])
        return tuple(out)

    def copy(self) -> "Partition":
        out = object.__new__(Partition)
        out.labels = self.labels.copy()
        return out


@dataclass
class RateParams:
    """Interaction probabilities: ordered intra-group triple plus chance rate q."""

    p_neg: float
    p_zero: float
    p_pos: float
    q: float

    def __post_init__(self):
        if not self.is_valid():
            raise ValueError(
                "rates must satisfy 0 < p_neg < p_zero < p_pos < 1 and 0 < q < 1"
            )

    def is_valid(self) -> bool:
        return bool(
            0.0 < self.p_neg < self.p_zero < self.p_pos < 1.0 and 0.0 < self.q < 1.0
        )

    def intra_vector(self) -> np.ndarray:
        """Intra-group rates indexed by sign code (sign + 1)."""
        return np.array([self.p_neg, self.p_zero, self.p_pos])

    def copy(self) -> "RateParams":
        return RateParams(self.p_neg, self.p_zero, self.p_pos, self.q)


@dataclass
class ObservationMatrix:
    """Symmetric pair-interaction counts out of t recording slots."""

    counts: np.ndarray
    t: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.t = int(self.t)
        _check_square_symmetric(self.counts, "counts")
        if self.t < 0:
            raise ValueError("t must be nonnegative")
        np.fill_diagonal(self.counts, 0)
        if self.counts.min() < 0 or self.counts.max() > self.t:
            raise ValueError("counts must lie in [0, t]")

    @property
    def n(self) -> int:
        return self.counts.shape[0]


class ObservationSet:
    """Ordered list of observation matrices over a common node set."""

    def __init__(self, periods):
        periods = list(periods)
        if not periods:
            raise ValueError("an observation set needs at least one period")
        n = periods[0].n
        if any(p.n != n for p in periods):
            raise ValueError("all periods must share the same node count")
        self.periods = periods

    @property
    def n(self) -> int:
        return self.periods[0].n

    def __len__(self) -> int:
        return len(self.periods)

    def __iter__(self):
        return iter(self.periods)

    def __getitem__(self, k):
        return self.periods[k]


@dataclass
class Priors:
    """Prior sign-category probabilities (rho_neg, rho_zero, rho_pos)."""

    rho: np.ndarray = field(default_factory=lambda: np.full(3, 1.0 / 3.0))

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        if self.rho.shape != (3,):
            raise ValueError("rho must have exactly three entries")
        if (self.rho < 0).any() or not math.isclose(self.rho.sum(), 1.0, abs_tol=1e-12):
            raise ValueError("rho entries must be nonnegative and sum to 1")

    def log_rho(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.rho)


@dataclass
class PeriodParams:
    """Per-period latent variables: opportunity partition and interaction rates."""

    partition: Partition
    rates: RateParams


@dataclass
class ModelState:
    """Full latent state: shared signed network plus per-period parameters."""

    network: SignedNetwork
    periods: list[PeriodParams]
    log_posterior: float = math.nan

    def __post_init__(self):
        if not self.periods:
            raise ValueError("state needs at least one period")
        n = self.network.n
        if any(p.partition.n != n for p in self.periods):
            raise ValueError("partition sizes must match the network")

    @property
    def n(self) -> int:
        return self.network.n

    def copy(self) -> "ModelState":
        out = object.__new__(ModelState)
        out.network = self.network.copy()
        out.periods = [
            PeriodParams(p.partition.copy(), p.rates.copy()) for p in self.periods
        ]
        out.log_posterior = self.log_posterior
        return out


# ---------------------------------------------------------------------------
# Densities


def log_binomial_term(x: int, t: int, p: float) -> float:
    """log of C(t, x) * p**x * (1-p)**(t-x).

    The coefficient is evaluated through log-gamma so large ``t`` cannot
    overflow.
    """
    if not 0 <= x <= t:
        raise ValueError(f"count x={x} must lie in [0, t={t}]")
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability p={p} must lie in (0, 1)")
    coef = gammaln(t + 1) - gammaln(x + 1) - gammaln(t - x + 1)
    return float(coef + x * math.log(p) + (t - x) * math.log1p(-p))


def pair_rates(network: SignedNetwork, partition: Partition, rates: RateParams) -> np.ndarray:
    """Per-pair success probability: sign-dependent within a group, q across."""
    same = partition.labels[:, None] == partition.labels[None, :]
    intra = rates.intra_vector()[network.signs + 1]
    out = np.where(same, intra, rates.q)
    np.fill_diagonal(out, 0.0)
    return out


def log_likelihood(
    obs: ObservationMatrix,
    network: SignedNetwork,
    partition: Partition,
    rates: RateParams,
) -> float:
    """Log-probability of one period's counts given the latent variables."""
    n = obs.n
    if network.n != n or partition.n != n:
        raise ValueError("observation, network, and partition sizes must match")
    if not rates.is_valid():
        raise ValueError("rates violate the ordering constraint")
    iu, ju = np.triu_indices(n, 1)
    x = obs.counts[iu, ju]
    p = pair_rates(network, partition, rates)[iu, ju]
    t = obs.t
    coef = gammaln(t + 1) - gammaln(x + 1) - gammaln(t - x + 1)
    return float(np.sum(coef + x * np.log(p) + (t - x) * np.log1p(-p)))


def log_posterior(state: ModelState, obs: ObservationSet, priors: Priors | None = None) -> float:
    """Unnormalized log-posterior of a state.

    Returns -inf as soon as any period's rates violate the ordering
    constraint.  Constant prior factors (uniform partition prior, the
    rate-prior normalization) are dropped; the per-pair log rho terms are
    kept so non-uniform sign priors flow through.
    """
    if priors is None:
        priors = Priors()
    if len(state.periods) != len(obs):
        raise ValueError("state and observations disagree on the number of periods")
    if state.n != obs.n:
        raise ValueError("state and observations disagree on the node count")
    for pp in state.periods:
        if not pp.rates.is_valid():
            return -math.inf
    total = 0.0
    for pp, om in zip(state.periods, obs):
        total += log_likelihood(om, state.network, pp.partition, pp.rates)
    iu, ju = np.triu_indices(state.n, 1)
    total += float(priors.log_rho()[state.network.signs[iu, ju] + 1].sum())
    return total


def expected_counts(
    network: SignedNetwork, partition: Partition, rates: RateParams, t: int
) -> np.ndarray:
    """Mean count matrix: t times the per-pair interaction probability."""
    return t * pair_rates(network, partition, rates)


def sample_observations(
    network: SignedNetwork,
    partition: Partition,
    rates: RateParams,
    t: int,
    rng: np.random.Generator,
) -> ObservationMatrix:
    """Draw one period of counts; each pair is an independent binomial."""
    n = network.n
    iu, ju = np.triu_indices(n, 1)
    p = pair_rates(network, partition, rates)[iu, ju]
    draws = rng.binomial(t, p) if t > 0 else np.zeros(iu.size, dtype=np.int64)
    counts = np.zeros((n, n), dtype=np.int64)
    counts[iu, ju] = draws
    counts[ju, iu] = draws
    return ObservationMatrix(counts, t)
