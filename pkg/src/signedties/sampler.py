"""Coordinate-wise Metropolis-Hastings sampler over (signs, groups, rates).

One sweep cycles the parameter blocks in a fixed order: every unordered
pair gets a sign-flip proposal, then each intra-group rate and the chance
rate get a Gaussian random-walk step per period, and finally every node
gets one group-move proposal per period.  Sign flips and rate steps use
symmetric proposals, so their acceptance ratio is a bare posterior ratio;
group moves are drawn from a count-guided distribution and carry the usual
proposal correction.

The module exposes each kernel's log acceptance ratio as a standalone
function (used by the audit tests) and a fast vectorized sweep used by
``run_chain`` and ``run_tempered``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ModelState,
    ObservationSet,
    Partition,
    PeriodParams,
    Priors,
    RateParams,
    SignedNetwork,
    log_posterior,
)

DEFAULT_RATES = (0.25, 0.5, 0.75, 0.1)


@dataclass
class SamplerConfig:
    sigma_intra: float = 0.01
    sigma_inter: float = 0.1
    sweeps: int = 1000
    burn_in: int = 200
    thin: int = 1
    seed: int = 0
    # Length of the single-group warm-up inside smart_init; None means 20%
    # of sweeps.
    init_sweeps: int | None = None
    # Sign-flip proposals per sweep: None proposes one flip per unordered
    # pair; an integer proposes that many uniformly chosen distinct pairs.
    # Small values keep never-grouped pairs' signs from re-randomizing every
    # sweep, which matters for mixing on large instances.
    edge_updates: int | None = None

    def __post_init__(self):
        if self.sigma_intra <= 0 or self.sigma_inter <= 0:
            raise ValueError("proposal standard deviations must be positive")
        if not 0 <= self.burn_in < self.sweeps:
            raise ValueError("burn_in must satisfy 0 <= burn_in < sweeps")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.edge_updates is not None and self.edge_updates < 1:
            raise ValueError("edge_updates must be at least 1")
        if self.init_sweeps is not None and self.init_sweeps < 0:
            raise ValueError("init_sweeps must be nonnegative")

    def resolved_init_sweeps(self) -> int:
        if self.init_sweeps is not None:
            return self.init_sweeps
        return max(1, round(0.2 * self.sweeps))


@dataclass
class TemperatureLadder:
    """Inverse temperatures for the replica ensemble; the first must be 1."""

    betas: tuple = (1.0, 0.8, 0.64, 0.512, 0.41)
    swap_interval: int = 10

    def __post_init__(self):
        self.betas = tuple(float(b) for b in self.betas)
        if not self.betas or self.betas[0] != 1.0:
            raise ValueError("the ladder must start at beta = 1")
        if any(b <= 0 for b in self.betas):
            raise ValueError("all betas must be positive")
        if any(a <= b for a, b in zip(self.betas, self.betas[1:])):
            raise ValueError("betas must be strictly decreasing")
        if self.swap_interval < 1:
            raise ValueError("swap_interval must be at least 1")


@dataclass
class SampleSet:
    """Thinned post-burn-in snapshots with their log-posterior values."""

    draws: list[ModelState]
    log_posteriors: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.log_posteriors is None:
            self.log_posteriors = np.array([d.log_posterior for d in self.draws])
        self.log_posteriors = np.asarray(self.log_posteriors, dtype=float)
        if len(self.log_posteriors) != len(self.draws):
            raise ValueError("one log-posterior per draw required")
        if self.draws:
            n = self.draws[0].n
            k = len(self.draws[0].periods)
            if any(d.n != n or len(d.periods) != k for d in self.draws):
                raise ValueError("all draws must share node and period counts")

    def __len__(self) -> int:
        return len(self.draws)

    @property
    def n(self) -> int:
        if not self.draws:
            raise ValueError("empty sample set")
        return self.draws[0].n


def initial_state(obs: ObservationSet, priors: Priors | None = None) -> ModelState:
    """All-zero network, default ordered rates, all-singleton partitions."""
    n = obs.n
    periods = [
        PeriodParams(Partition.singletons(n), RateParams(*DEFAULT_RATES))
        for _ in obs
    ]
    state = ModelState(SignedNetwork.empty(n), periods)
    state.log_posterior = log_posterior(state, obs, priors)
    return state


# ---------------------------------------------------------------------------
# Proposal kernels and their log acceptance ratios


def propose_edge_flip(state: ModelState, rng: np.random.Generator):
    """Pick an unordered pair uniformly and one of the two other signs."""
    n = state.n
    if n < 2:
        raise ValueError("need at least two nodes")
    flat = rng.integers(0, n * (n - 1) // 2)
    iu, ju = np.triu_indices(n, 1)
    i, j = int(iu[flat]), int(ju[flat])
    code = state.network.signs[i, j] + 1
    new_code = (code + 1 + rng.integers(0, 2)) % 3
    return (i, j), int(new_code) - 1


def edge_flip_log_ratio(
    state: ModelState,
    obs: ObservationSet,
    pair: tuple,
    new_sign: int,
    priors: Priors | None = None,
) -> float:
    """Log posterior ratio for switching one pair's sign.

    Only periods in which the pair shares a group contribute; a flip
    between nodes that never share a group moves only the prior term.
    """
    if priors is None:
        priors = Priors()
    i, j = pair
    old_sign = int(state.network.signs[i, j])
    total = float(priors.log_rho()[new_sign + 1] - priors.log_rho()[old_sign + 1])
    for pp, om in zip(state.periods, obs):
        if pp.partition.labels[i] != pp.partition.labels[j]:
            continue
        x = int(om.counts[i, j])
        p_old = pp.rates.intra_vector()[old_sign + 1]
        p_new = pp.rates.intra_vector()[new_sign + 1]
        total += x * math.log(p_new / p_old)
        total += (om.t - x) * math.log((1.0 - p_new) / (1.0 - p_old))
    return total


def propose_rate(current: float, sigma: float, rng: np.random.Generator) -> float:
    """Gaussian random-walk proposal; may land outside (0, 1)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return current + sigma * rng.standard_normal()

def _rate_delta(x_sum: float, trial_sum: float, p_old: float, p_new: float) -> float:
    return x_sum * math.log(p_new / p_old) + (trial_sum - x_sum) * math.log(
        (1.0 - p_new) / (1.0 - p_old)
    )


def intra_rate_log_ratio(
    state: ModelState, obs: ObservationSet, period: int, sign: int, p_new: float
) -> float:
    """Log ratio for moving one intra-group rate of one period to p_new.

    Any proposal that breaks 0 < p_neg < p_zero < p_pos < 1 scores -inf and
    is therefore rejected.
    """
    if sign not in (-1, 0, 1):
        raise ValueError("sign must be -1, 0, or +1")
    pp = state.periods[period]
    triple = pp.rates.intra_vector()
    triple[sign + 1] = p_new
    if not (0.0 < triple[0] < triple[1] < triple[2] < 1.0):
        return -math.inf
    om = obs[period]
    labels = pp.partition.labels
    iu, ju = np.triu_indices(state.n, 1)
    mask = (labels[iu] == labels[ju]) & (state.network.signs[iu, ju] == sign)
    x_sum = float(om.counts[iu, ju][mask].sum())
    trial_sum = float(om.t * mask.sum())
    p_old = pp.rates.intra_vector()[sign + 1]
    return _rate_delta(x_sum, trial_sum, p_old, p_new)


def inter_rate_log_ratio(
    state: ModelState, obs: ObservationSet, period: int, q_new: float
) -> float:
    """Log ratio for moving one period's chance rate to q_new."""
    if not 0.0 < q_new < 1.0:
        return -math.inf
    pp = state.periods[period]
    om = obs[period]
    labels = pp.partition.labels
    iu, ju = np.triu_indices(state.n, 1)
    mask = labels[iu] != labels[ju]
    x_sum = float(om.counts[iu, ju][mask].sum())
    trial_sum = float(om.t * mask.sum())
    return _rate_delta(x_sum, trial_sum, pp.rates.q, q_new)


def partition_proposal_distribution(
    state: ModelState, obs: ObservationSet, period: int, node: int
) -> np.ndarray:
    """Proposal probabilities over target groups 1..gamma plus a new group.

    Existing groups are weighted by one plus the node's total counts into
    them, so the walk prefers groups the node demonstrably interacts with;
    the last entry is the fresh-group probability.
    """
    labels = state.periods[period].partition.labels
    gamma = state.periods[period].partition.gamma
    x_row = obs[period].counts[node].astype(float)
    sums = np.bincount(labels, weights=x_row, minlength=gamma + 2)[1 : gamma + 2]
    numer = 1.0 + sums
    return numer / numer.sum()


def move_node(partition: Partition, node: int, target: int) -> Partition:
    """Move one node to a target group (gamma+1 creates a group), re-indexing
    so labels stay contiguous when the node's old group empties."""
    labels = partition.labels
    gamma = partition.gamma
    if not 1 <= target <= gamma + 1:
        raise ValueError("target group out of range")
    new = labels.copy()
    origin = labels[node]
    new[node] = target
    if not (new == origin).any():
        new[new > origin] -= 1
    return Partition(new)


def _reverse_target(labels: np.ndarray, new_labels: np.ndarray, node: int) -> int:
    """Target group of the reverse move, in the proposed partition's labels."""
    origin = labels[node]
    remnants = (labels == origin) & (np.arange(labels.size) != node)
    if remnants.any():
        return int(new_labels[np.flatnonzero(remnants)[0]])
    return int(new_labels.max()) + 1


def partition_move_log_ratio(
    state: ModelState, obs: ObservationSet, period: int, node: int, target: int
) -> float:
    """Log acceptance ratio for one node's group move, proposal correction
    included.  The reverse-move probability is evaluated on the re-indexed
    proposed partition."""
    pp = state.periods[period]
    labels = pp.partition.labels
    gamma = pp.partition.gamma
    if not 1 <= target <= gamma + 1:
        raise ValueError("target group out of range")
    if target == labels[node]:
        return 0.0

    om = obs[period]
    new_part = move_node(pp.partition, node, target)

    # Likelihood change: pairs through `node` whose group status flips.
    delta = 0.0
    intra = pp.rates.intra_vector()
    q = pp.rates.q
    signs = state.network.signs
    for j in range(state.n):
        if j == node:
            continue
        was_same = labels[j] == labels[node]
        now_same = new_part.labels[j] == new_part.labels[node]
        if was_same == now_same:
            continue
        x = int(om.counts[node, j])
        p = intra[signs[node, j] + 1]
        lo, hi = (p, q) if was_same else (q, p)
        delta += x * math.log(hi / lo) + (om.t - x) * math.log((1.0 - hi) / (1.0 - lo))

    kappa_fwd = partition_proposal_distribution(state, obs, period, node)[target - 1]
    rev_state = ModelState(
        state.network,
        [
            other if k != period else PeriodParams(new_part, other.rates)
            for k, other in enumerate(state.periods)
        ],
    )
    rev = _reverse_target(labels, new_part.labels, node)
    kappa_rev = partition_proposal_distribution(rev_state, obs, period, node)[rev - 1]
    return delta + math.log(kappa_rev) - math.log(kappa_fwd)


# ---------------------------------------------------------------------------
# Sweeps


class _ChainRunner:
    """Precomputed caches for fast repeated sweeps over one state."""

    def __init__(
        self,
        state: ModelState,
        obs: ObservationSet,
        config: SamplerConfig,
        rng: np.random.Generator,
        priors: Priors | None = None,
    ):
        if state.n != obs.n or len(state.periods) != len(obs):
            raise ValueError("state and observations are incompatible")
        self.state = state
        self.obs = obs
        self.config = config
        self.rng = rng
        self.priors = priors if priors is not None else Priors()
        self.log_rho = self.priors.log_rho()
        n = state.n
        self.n = n
        self.iu, self.ju = np.triu_indices(n, 1)
        self.npairs = self.iu.size
        self.x_full = [om.counts for om in obs]
        self.x_pairs = [om.counts[self.iu, self.ju] for om in obs]
        self.x_rows = [om.counts.sum(axis=1).astype(float) for om in obs]
        self.t = [om.t for om in obs]

    # -- per-sweep caches -------------------------------------------------

    def _refresh(self):
        state = self.state
        self.same_pairs = [
            pp.partition.labels[self.iu] == pp.partition.labels[self.ju]
            for pp in state.periods
        ]
        self.log_p = [np.log(pp.rates.intra_vector()) for pp in state.periods]
        self.log_1mp = [np.log1p(-pp.rates.intra_vector()) for pp in state.periods]

    def sweep(
        self,
        beta: float = 1.0,
        update_edges: bool = True,
        update_p: bool = True,
        update_q: bool = True,
        update_partitions: bool = True,
    ) -> None:
        self._refresh()
        if update_edges:
            self._edge_block(beta)
        for k in range(len(self.obs)):
            if update_p:
                self._intra_block(k, beta)
            if update_q:
                self._inter_block(k, beta)
        if update_partitions:
            for k in range(len(self.obs)):
                self._partition_block(k, beta)

    def _edge_block(self, beta: float) -> None:
        # All pair terms are conditionally independent given the groups and
        # rates, so the per-pair flips commute and one vectorized pass is
        # equivalent to scanning the selected pairs in any order.
        state = self.state
        signs = state.network.signs
        if self.config.edge_updates is None:
            sel = slice(None)
            count = self.npairs
            iu, ju = self.iu, self.ju
        else:
            count = min(self.config.edge_updates, self.npairs)
            sel = self.rng.choice(self.npairs, size=count, replace=False)
            iu, ju = self.iu[sel], self.ju[sel]
        codes = signs[iu, ju].astype(np.int64) + 1
        shift = self.rng.integers(1, 3, size=count)
        new_codes = (codes + shift) % 3
        delta = self.log_rho[new_codes] - self.log_rho[codes]
        for k in range(len(self.obs)):
            su = self.same_pairs[k][sel]
            lp, l1p = self.log_p[k], self.log_1mp[k]
            x = self.x_pairs[k][sel]
            d = x * (lp[new_codes] - lp[codes]) + (self.t[k] - x) * (
                l1p[new_codes] - l1p[codes]
            )
            delta = delta + np.where(su, d, 0.0)
        accept = np.log(self.rng.random(count)) < beta * delta
        if accept.any():
            ia, ja = iu[accept], ju[accept]
            vals = (new_codes[accept] - 1).astype(np.int8)
            signs[ia, ja] = vals
            signs[ja, ia] = vals
            state.log_posterior += float(delta[accept].sum())

    def _intra_block(self, k: int, beta: float) -> None:
        state = self.state
        pp = state.periods[k]
        su = self.same_pairs[k]
        codes = state.network.signs[self.iu, self.ju] + 1
        x = self.x_pairs[k]
        noise = self.config.sigma_intra * self.rng.standard_normal(3)
        uni = self.rng.random(3)
        triple = pp.rates.intra_vector()
        for s in range(3):
            p_new = triple[s] + noise[s]
            cand = triple.copy()
            cand[s] = p_new
            if not (0.0 < cand[0] < cand[1] < cand[2] < 1.0):
                continue
            mask = su & (codes == s)
            x_sum = float(x[mask].sum())
            trials = float(self.t[k] * mask.sum())
            delta = _rate_delta(x_sum, trials, triple[s], p_new)
            if math.log(uni[s]) < beta * delta:
                triple = cand
                state.log_posterior += delta
        pp.rates.p_neg, pp.rates.p_zero, pp.rates.p_pos = (
            float(triple[0]),
            float(triple[1]),
            float(triple[2]),
        )
        self.log_p[k] = np.log(triple)
        self.log_1mp[k] = np.log1p(-triple)

    def _inter_block(self, k: int, beta: float) -> None:
        state = self.state
        pp = state.periods[k]
        q_new = pp.rates.q + self.config.sigma_inter * self.rng.standard_normal()
        u = self.rng.random()
        if not 0.0 < q_new < 1.0:
            return
        cross = ~self.same_pairs[k]
        x_sum = float(self.x_pairs[k][cross].sum())
        trials = float(self.t[k] * cross.sum())
        delta = _rate_delta(x_sum, trials, pp.rates.q, q_new)
        if math.log(u) < beta * delta:
            pp.rates.q = float(q_new)
            state.log_posterior += delta

    def _partition_block(self, k: int, beta: float) -> None:
        state = self.state
        pp = state.periods[k]
        labels = pp.partition.labels
        x = self.x_full[k]
        x_rows = self.x_rows[k]
        t = self.t[k]
        lp, l1p = self.log_p[k], self.log_1mp[k]
        log_q = math.log(pp.rates.q)
        log_1mq = math.log1p(-pp.rates.q)
        signs = state.network.signs
        order = self.rng.permutation(self.n)
        u_target = self.rng.random(self.n)
        u_accept = self.rng.random(self.n)
        idx = np.arange(self.n)

        for node in order:
            gamma = int(labels.max())
            xi = x[node].astype(float)
            sums = np.bincount(labels, weights=xi, minlength=gamma + 2)[1 : gamma + 2]
            numer = 1.0 + sums
            cum = np.cumsum(numer)
            target = int(np.searchsorted(cum, u_target[node] * cum[-1], side="right")) + 1
            origin = int(labels[node])
            if target == origin:
                continue

            # Likelihood change over pairs through `node` that switch
            # between intra- and cross-group status.
            old_members = np.flatnonzero((labels == origin) & (idx != node))
            new_members = np.flatnonzero(labels == target) if target <= gamma else idx[:0]
            delta = 0.0
            if old_members.size:
                c = signs[node, old_members] + 1
                xo = xi[old_members]
                delta += float(
                    np.sum(xo * (log_q - lp[c]) + (t - xo) * (log_1mq - l1p[c]))
                )
            if new_members.size:
                c = signs[node, new_members] + 1
                xn = xi[new_members]
                delta += float(
                    np.sum(xn * (lp[c] - log_q) + (t - xn) * (l1p[c] - log_1mq))
                )

            new_labels = labels.copy()
            new_labels[node] = target
            vacated = not (new_labels == origin).any()
            gamma_new = max(gamma, target)
            if vacated:
                new_labels[new_labels > origin] -= 1
                gamma_new -= 1

            if vacated:
                rev = gamma_new + 1
            else:
                rev = origin
            sums_rev = np.bincount(new_labels, weights=xi, minlength=gamma_new + 2)
            kappa_fwd = numer[target - 1] / cum[-1]
            kappa_rev = (1.0 + sums_rev[rev] if rev <= gamma_new else 1.0) / (
                x_rows[node] + gamma_new + 1.0
            )

            log_r = beta * delta + math.log(kappa_rev) - math.log(kappa_fwd)
            if math.log(u_accept[node]) < log_r:
                labels[:] = new_labels
                state.log_posterior += delta


def sweep(
    state: ModelState,
    obs: ObservationSet,
    config: SamplerConfig,
    rng: np.random.Generator,
    priors: Priors | None = None,
    **blocks,
) -> ModelState:
    """Run one full update cycle in place and return the state."""
    _ChainRunner(state, obs, config, rng, priors).sweep(**blocks)
    return state


def smart_init(
    obs: ObservationSet,
    config: SamplerConfig,
    rng: np.random.Generator,
    priors: Priors | None = None,
) -> ModelState:
    """Warm-start: estimate signs and intra rates with every node in one
    group, then restart the partitions from all singletons.

    The chance rate is not updated during the warm-up because a single
    group leaves it with no cross-group pairs to inform it.
    """
    n = obs.n
    periods = [
        PeriodParams(Partition.single_group(n), RateParams(*DEFAULT_RATES))
        for _ in obs
    ]
    state = ModelState(SignedNetwork.empty(n), periods)
    state.log_posterior = log_posterior(state, obs, priors)
    runner = _ChainRunner(state, obs, config, rng, priors)
    for _ in range(config.resolved_init_sweeps()):
        runner.sweep(update_q=False, update_partitions=False)
    for pp in state.periods:
        pp.partition = Partition.singletons(n)
    state.log_posterior = log_posterior(state, obs, priors)
    return state


def run_chain(
    obs: ObservationSet,
    config: SamplerConfig,
    rng: np.random.Generator | None = None,
    priors: Priors | None = None,
) -> SampleSet:
    """Smart-initialize, then sweep, keeping thinned post-burn-in snapshots."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    state = smart_init(obs, config, rng, priors)
    runner = _ChainRunner(state, obs, config, rng, priors)
    draws: list[ModelState] = []
    for s in range(1, config.sweeps + 1):
        runner.sweep()
        if s > config.burn_in and (s - config.burn_in) % config.thin == 0:
            draws.append(state.copy())
    return SampleSet(draws)


def swap_log_alpha(beta_u: float, beta_v: float, lp_u: float, lp_v: float) -> float:
    """Log acceptance probability (before capping) for exchanging the states
    of two replicas at inverse temperatures beta_u and beta_v."""
    return (beta_v - beta_u) * (lp_u - lp_v)


def run_tempered(
    obs: ObservationSet,
    config: SamplerConfig,
    ladder: TemperatureLadder,
    rng: np.random.Generator | None = None,
    priors: Priors | None = None,
) -> SampleSet:
    """Replica-exchange variant: one chain per beta, periodic neighbor swaps,
    samples taken from the beta = 1 chain only."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    runners = [
        _ChainRunner(initial_state(obs, priors), obs, config, rng, priors)
        for _ in ladder.betas
    ]
    draws: list[ModelState] = []
    for s in range(1, config.sweeps + 1):
        for runner, beta in zip(runners, ladder.betas):
            runner.sweep(beta=beta)
        if s % ladder.swap_interval == 0 and len(runners) > 1:
            u = int(rng.integers(0, len(runners) - 1))
            v = u + 1
            log_alpha = swap_log_alpha(
                ladder.betas[u],
                ladder.betas[v],
                runners[u].state.log_posterior,
                runners[v].state.log_posterior,
            )
            if math.log(rng.random()) < log_alpha:
                runners[u].state, runners[v].state = runners[v].state, runners[u].state
        if s > config.burn_in and (s - config.burn_in) % config.thin == 0:
            draws.append(runners[0].state.copy())
    return SampleSet(draws)
