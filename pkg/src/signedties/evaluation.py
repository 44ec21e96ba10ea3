"""Scoring and model criticism.

One-vs-rest AUC for sign recovery, the log-likelihood-ratio discrepancy
with its Bayesian p-value (posterior predictive check), the friendship
questionnaire comparison, and an exhaustive-enumeration posterior oracle
for tiny instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.stats import rankdata

from .estimation import EdgeMarginals
from .model import (
    ObservationMatrix,
    ObservationSet,
    Priors,
    SignedNetwork,
    expected_counts,
    sample_observations,
)
from .sampler import SampleSet


@dataclass
class AucReport:
    method: str
    auc_positive: float
    auc_negative: float
    internal_edge_fraction: float = math.nan
    seed: int | None = None

    def __post_init__(self):
        for v in (self.auc_positive, self.auc_negative):
            if not (math.isnan(v) or 0.0 <= v <= 1.0):
                raise ValueError("AUC values must lie in [0, 1]")


@dataclass
class PpcResult:
    """Paired observed/replicated discrepancies and p-values, per period."""

    d_observed: list = field(default_factory=list)   # one array per period
    d_replicated: list = field(default_factory=list)
    p_values: list = field(default_factory=list)

    def __post_init__(self):
        for obs, rep in zip(self.d_observed, self.d_replicated):
            if len(obs) != len(rep):
                raise ValueError("observed and replicated lists must pair up")
        for p in self.p_values:
            if not 0.0 <= p <= 1.0:
                raise ValueError("p-values must lie in [0, 1]")


def auc_one_vs_rest(scores: np.ndarray, truth: SignedNetwork, target: int) -> float:
    """Probability that a random in-class pair outscores a random out-class
    pair, ties at half credit (rank formulation)."""
    if target not in (-1, 0, 1):
        raise ValueError("target class must be a sign")
    iu, ju = np.triu_indices(truth.n, 1)
    s = np.asarray(scores)[iu, ju].astype(float)
    pos = truth.signs[iu, ju] == target
    n_pos = int(pos.sum())
    n_neg = int(pos.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined without both classes present")
    ranks = rankdata(s)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def discrepancy(obs: ObservationMatrix, expected: np.ndarray) -> float:
    """Sum over pairs of X * log(X / E[X]); zero-count terms contribute 0.

    A positive count against a zero expectation makes the distance
    infinite.
    """
    expected = np.asarray(expected, dtype=float)
    if expected.shape != obs.counts.shape:
        raise ValueError("expected matrix shape mismatch")
    iu, ju = np.triu_indices(obs.n, 1)
    x = obs.counts[iu, ju].astype(float)
    e = expected[iu, ju]
    live = x > 0
    if np.any(e[live] == 0):
        return math.inf
    out = np.zeros_like(x)
    out[live] = x[live] * np.log(x[live] / e[live])
    return float(out.sum())


def posterior_predictive(
    obs: ObservationSet, samples: SampleSet, rng: np.random.Generator
) -> PpcResult:
    """Pair every posterior draw with a replicated dataset and compare
    discrepancies.

    For each draw and period, counts are re-simulated under the draw's own
    parameters and both datasets are scored against that draw's expected
    matrix.  The p-value is the fraction of draws whose replicated
    discrepancy exceeds the observed one.  Draws use independent rng
    substreams so the result does not depend on evaluation order.
    """
    if len(samples) == 0:
        raise ValueError("need at least one posterior draw")
    if samples.n != obs.n or len(samples.draws[0].periods) != len(obs):
        raise ValueError("samples were not drawn on these observations")
    n_draws = len(samples)
    n_periods = len(obs)
    d_obs = np.zeros((n_periods, n_draws))
    d_rep = np.zeros((n_periods, n_draws))
    streams = rng.spawn(n_draws)
    for ell, (draw, sub) in enumerate(zip(samples.draws, streams)):
        for k, om in enumerate(obs):
            pp = draw.periods[k]
            expected = expected_counts(draw.network, pp.partition, pp.rates, om.t)
            replicated = sample_observations(
                draw.network, pp.partition, pp.rates, om.t, sub
            )
            d_obs[k, ell] = discrepancy(om, expected)
            d_rep[k, ell] = discrepancy(replicated, expected)
    p_values = (d_obs < d_rep).mean(axis=1)
    return PpcResult(
        d_observed=[d_obs[k] for k in range(n_periods)],
        d_replicated=[d_rep[k] for k in range(n_periods)],
        p_values=[float(p) for p in p_values],
    )


@dataclass
class FriendshipReport:
    """Per-group posterior-mean values (averaged across days), with bins."""

    group_values: dict
    group_means: dict
    bin_edges: np.ndarray
    histograms: dict


def friendship_comparison(
    mean_matrices: list,
    reciprocated: set,
    unreciprocated: set,
    control: set,
    presence: list | None = None,
    bins: int = 40,
) -> FriendshipReport:
    """Average each pair's posterior mean across the days both nodes appear,
    then summarize per friendship group.

    ``presence`` optionally gives one boolean node-presence vector per day;
    without it every node counts as present every day.  A pair listed in
    several groups is counted in each independently.
    """
    groups = {
        "reciprocated": reciprocated,
        "unreciprocated": unreciprocated,
        "control": control,
    }
    for name, pairs in groups.items():
        if not pairs:
            raise ValueError(f"the {name} pair set is empty")
    mats = [np.asarray(m, dtype=float) for m in mean_matrices]
    n = mats[0].shape[0]
    if presence is None:
        presence = [np.ones(n, dtype=bool)] * len(mats)

    def pair_value(i: int, j: int) -> float:
        vals = [
            m[i, j]
            for m, pres in zip(mats, presence)
            if pres[i] and pres[j] and not math.isnan(m[i, j])
        ]
        return float(np.mean(vals)) if vals else math.nan

    edges = np.linspace(-1.0, 1.0, bins + 1)
    group_values, group_means, histograms = {}, {}, {}
    for name, pairs in groups.items():
        vals = np.array([pair_value(i, j) for i, j in sorted(pairs)])
        vals = vals[~np.isnan(vals)]
        group_values[name] = vals
        group_means[name] = float(vals.mean()) if vals.size else math.nan
        histograms[name], _ = np.histogram(vals, bins=edges)
    return FriendshipReport(group_values, group_means, edges, histograms)


# ---------------------------------------------------------------------------
# Exhaustive posterior oracle


def set_partitions(n: int):
    """All set partitions of n items as canonical 1-based label vectors."""
    # Restricted-growth strings: label[i] <= 1 + max(label[:i]).
    def rec(prefix: list[int], top: int):
        if len(prefix) == n:
            yield np.array(prefix, dtype=np.int64)
            return
        for lab in range(1, top + 2):
            yield from rec(prefix + [lab], max(top, lab))

    yield from rec([1], 1)


def brute_force_marginals(
    obs: ObservationSet, grid_resolution: int = 20, priors: Priors | None = None
) -> EdgeMarginals:
    """Exact enumeration over (signs, partitions) with the rate posterior
    integrated on a grid.

    Ordered rate triples come from rejecting unordered combinations of a
    per-axis midpoint grid; the chance rate uses the same 1-d grid.  Only
    tiny instances are tractable: the sign space alone is 3^C(n,2).
    """
    if priors is None:
        priors = Priors()
    n = obs.n
    if n > 4:
        raise ValueError("the oracle enumerates sign matrices; n must be <= 4")
    m = n * (n - 1) // 2
    iu, ju = np.triu_indices(n, 1)

    grid = (np.arange(grid_resolution) + 0.5) / grid_resolution
    lg = np.log(grid)
    l1g = np.log1p(-grid)
    t0, t1, t2 = np.array(
        list(itertools.combinations(range(grid_resolution), 3))
    ).T  # strictly increasing triples

    # Per (partition, sign-assignment) the likelihood depends only on the
    # per-sign count sums inside groups and the cross-group sums.
    sign_vectors = np.array(list(itertools.product((-1, 0, 1), repeat=m)), dtype=np.int8)
    log_rho = priors.log_rho()
    prior_term = log_rho[sign_vectors + 1].sum(axis=1)

    partitions = list(set_partitions(n))
    period_weights = np.zeros((len(obs), sign_vectors.shape[0]))
    for k, om in enumerate(obs):
        x = om.counts[iu, ju]
        t = om.t
        w_networks = np.full(sign_vectors.shape[0], -np.inf)
        for labels in partitions:
            same = labels[iu] == labels[ju]
            x_cross = float(x[~same].sum())
            n_cross = int((~same).sum())
            log_mq = logsumexp(x_cross * lg + (n_cross * t - x_cross) * l1g) - math.log(
                grid_resolution
            )
            sx = np.stack(
                [((sign_vectors == s) * (x * same)).sum(axis=1) for s in (-1, 0, 1)],
                axis=1,
            ).astype(float)
            npairs = np.stack(
                [((sign_vectors == s) & same).sum(axis=1) for s in (-1, 0, 1)], axis=1
            ).astype(float)
            trials = npairs * t
            arg = (
                sx[:, 0, None] * lg[t0]
                + (trials[:, 0, None] - sx[:, 0, None]) * l1g[t0]
                + sx[:, 1, None] * lg[t1]
                + (trials[:, 1, None] - sx[:, 1, None]) * l1g[t1]
                + sx[:, 2, None] * lg[t2]
                + (trials[:, 2, None] - sx[:, 2, None]) * l1g[t2]
            )
            log_mp = logsumexp(arg, axis=1) - math.log(t0.size)
            w_networks = np.logaddexp(w_networks, log_mp + log_mq)
        period_weights[k] = w_networks

    log_w = prior_term + period_weights.sum(axis=0)
    w = np.exp(log_w - log_w.max())
    w /= w.sum()

    probs = np.zeros((n, n, 3))
    for s_idx, s in enumerate((-1, 0, 1)):
        mass = (w[:, None] * (sign_vectors == s)).sum(axis=0)
        probs[iu, ju, s_idx] = mass
        probs[ju, iu, s_idx] = mass
    return EdgeMarginals(probs)
