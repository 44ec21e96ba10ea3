import math

import numpy as np
import pytest

from signedties.model import (
    ModelState,
    ObservationMatrix,
    ObservationSet,
    Partition,
    PeriodParams,
    Priors,
    RateParams,
    SignedNetwork,
    expected_counts,
    log_binomial_term,
    log_likelihood,
    log_posterior,
    sample_observations,
)

from conftest import make_network, make_obs


class TestTypes:
    def test_network_requires_symmetry(self):
        with pytest.raises(ValueError, match="symmetric"):
            SignedNetwork(np.array([[0, 1], [0, 0]]))

    def test_network_rejects_out_of_range_sign(self):
        with pytest.raises(ValueError, match="signs"):
            make_network(2, {(0, 1): 2})

    def test_partition_labels_must_be_contiguous(self):
        with pytest.raises(ValueError, match="contiguous|exactly"):
            Partition(np.array([1, 3, 3]))
        part = Partition(np.array([2, 1, 2]))
        assert part.gamma == 2

    def test_partition_canonical_identifies_relabelings(self):
        assert Partition(np.array([2, 1, 2])).canonical() == (1, 2, 1)
        assert Partition(np.array([1, 2, 1])).canonical() == (1, 2, 1)

    def test_rates_enforce_strict_ordering(self):
        with pytest.raises(ValueError):
            RateParams(0.5, 0.5, 0.8, 0.1)
        with pytest.raises(ValueError):
            RateParams(0.3, 0.2, 0.8, 0.1)
        with pytest.raises(ValueError):
            RateParams(0.1, 0.2, 0.8, 1.0)

    def test_observation_counts_bounded_by_t(self):
        with pytest.raises(ValueError, match="counts"):
            make_obs(2, 3, {(0, 1): 4})

    def test_observation_set_needs_consistent_n(self):
        with pytest.raises(ValueError, match="share"):
            ObservationSet([make_obs(2, 1, {}), make_obs(3, 1, {})])

    def test_priors_must_sum_to_one(self):
        with pytest.raises(ValueError):
            Priors(np.array([0.5, 0.5, 0.5]))

    def test_state_copy_is_deep(self):
        obs = ObservationSet([make_obs(3, 2, {(0, 1): 1})])
        state = ModelState(
            make_network(3, {(0, 1): 1}),
            [PeriodParams(Partition.singletons(3), RateParams(0.2, 0.5, 0.8, 0.1))],
        )
        dup = state.copy()
        dup.network.signs[0, 1] = -1
        dup.periods[0].rates.q = 0.9
        assert state.network.signs[0, 1] == 1
        assert state.periods[0].rates.q == 0.1
        assert log_posterior(state, obs) != -math.inf


class TestLogBinomialTerm:
    def test_half_single_trial(self):
        assert log_binomial_term(0, 1, 0.5) == pytest.approx(math.log(0.5), abs=1e-12)

    def test_two_of_four(self):
        assert log_binomial_term(2, 4, 0.5) == pytest.approx(
            math.log(6 / 16), abs=1e-12
        )

    def test_one_of_two_low_rate(self):
        assert log_binomial_term(1, 2, 0.1) == pytest.approx(
            math.log(0.18), abs=1e-12
        )

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            log_binomial_term(3, 2, 0.5)
        with pytest.raises(ValueError):
            log_binomial_term(1, 2, 0.0)
        with pytest.raises(ValueError):
            log_binomial_term(1, 2, 1.0)

    def test_large_t_does_not_overflow(self):
        value = log_binomial_term(5000, 10_000, 0.5)
        assert math.isfinite(value)


class TestLogLikelihood:
    def test_single_pair_same_group(self):
        obs = make_obs(2, 1, {})
        net = make_network(2, {})
        rates = RateParams(0.25, 0.5, 0.75, 0.1)
        value = log_likelihood(obs, net, Partition.single_group(2), rates)
        assert value == pytest.approx(math.log(0.5), abs=1e-12)

    def test_single_pair_cross_group(self):
        obs = make_obs(2, 2, {(0, 1): 1})
        net = make_network(2, {})
        rates = RateParams(0.25, 0.5, 0.75, 0.1)
        value = log_likelihood(obs, net, Partition.singletons(2), rates)
        assert value == pytest.approx(math.log(0.18), abs=1e-12)

    def test_total_is_sum_of_pair_terms(self, rng):
        n, t = 5, 6
        iu, ju = np.triu_indices(n, 1)
        counts = np.zeros((n, n), dtype=np.int64)
        vals = rng.integers(0, t + 1, iu.size)
        counts[iu, ju] = vals
        counts[ju, iu] = vals
        obs = ObservationMatrix(counts, t)
        signs = np.zeros((n, n), dtype=np.int8)
        sv = rng.integers(-1, 2, iu.size).astype(np.int8)
        signs[iu, ju] = sv
        signs[ju, iu] = sv
        net = SignedNetwork(signs)
        part = Partition(np.array([1, 1, 2, 2, 1]))
        rates = RateParams(0.2, 0.4, 0.7, 0.15)
        total = log_likelihood(obs, net, part, rates)
        by_hand = 0.0
        for i, j in zip(iu, ju):
            if part.labels[i] == part.labels[j]:
                p = rates.intra_vector()[net.signs[i, j] + 1]
            else:
                p = rates.q
            by_hand += log_binomial_term(int(obs.counts[i, j]), t, float(p))
        assert total == pytest.approx(by_hand, abs=1e-12)

    def test_dimension_mismatch(self):
        obs = make_obs(3, 1, {})
        net = make_network(2, {})
        with pytest.raises(ValueError):
            log_likelihood(obs, net, Partition.singletons(3), RateParams(0.2, 0.5, 0.8, 0.1))


class TestLogPosterior:
    def _state(self, n, rates, labels=None):
        part = Partition(labels) if labels is not None else Partition.single_group(n)
        return ModelState(make_network(n, {}), [PeriodParams(part, rates)])

    def test_violated_ordering_gives_minus_inf(self):
        state = self._state(2, RateParams(0.2, 0.5, 0.8, 0.1))
        state.periods[0].rates.p_neg = 0.6  # mutate past the constructor check
        obs = ObservationSet([make_obs(2, 1, {})])
        assert log_posterior(state, obs) == -math.inf

    def test_single_period_is_likelihood_plus_prior(self):
        n = 3
        obs = ObservationSet([make_obs(n, 2, {(0, 1): 1, (1, 2): 2})])
        state = self._state(n, RateParams(0.2, 0.5, 0.8, 0.1))
        expected = log_likelihood(
            obs[0], state.network, state.periods[0].partition, state.periods[0].rates
        ) + 3 * math.log(1 / 3)
        assert log_posterior(state, obs) == pytest.approx(expected, abs=1e-12)

    def test_two_periods_add_likelihoods_single_prior(self):
        n = 3
        om1 = make_obs(n, 2, {(0, 1): 1})
        om2 = make_obs(n, 4, {(1, 2): 3})
        rates1 = RateParams(0.2, 0.5, 0.8, 0.1)
        rates2 = RateParams(0.1, 0.4, 0.9, 0.3)
        net = make_network(n, {(0, 1): 1})
        state = ModelState(
            net,
            [
                PeriodParams(Partition.single_group(n), rates1),
                PeriodParams(Partition(np.array([1, 2, 2])), rates2),
            ],
        )
        both = log_posterior(state, ObservationSet([om1, om2]))
        lik1 = log_likelihood(om1, net, state.periods[0].partition, rates1)
        lik2 = log_likelihood(om2, net, state.periods[1].partition, rates2)
        prior = 3 * math.log(1 / 3)
        assert both == pytest.approx(lik1 + lik2 + prior, abs=1e-12)

    def test_nonuniform_prior_changes_value(self):
        n = 2
        obs = ObservationSet([make_obs(n, 1, {})])
        state = self._state(n, RateParams(0.2, 0.5, 0.8, 0.1))
        skew = Priors(np.array([0.6, 0.3, 0.1]))
        delta = log_posterior(state, obs, skew) - log_posterior(state, obs)
        assert delta == pytest.approx(math.log(0.3) - math.log(1 / 3), abs=1e-12)

    def test_finite_iff_rates_valid(self, rng):
        from conftest import random_obs, random_state

        obs = random_obs(rng, 4, 5)
        state = random_state(rng, 4, obs)
        assert math.isfinite(log_posterior(state, obs))
        state.periods[0].rates.p_zero = state.periods[0].rates.p_pos + 0.01
        assert log_posterior(state, obs) == -math.inf


class TestExpectedCounts:
    def test_same_group_positive(self):
        net = make_network(2, {(0, 1): 1})
        rates = RateParams(0.1, 0.5, 0.9, 0.05)
        out = expected_counts(net, Partition.single_group(2), rates, 10)
        assert out[0, 1] == pytest.approx(9.0)

    def test_cross_group(self):
        net = make_network(2, {(0, 1): 1})
        rates = RateParams(0.1, 0.5, 0.9, 0.05)
        out = expected_counts(net, Partition.singletons(2), rates, 20)
        assert out[0, 1] == pytest.approx(1.0)

    def test_symmetric(self, rng):
        from conftest import random_obs, random_state

        obs = random_obs(rng, 5, 4)
        state = random_state(rng, 5, obs)
        out = expected_counts(
            state.network, state.periods[0].partition, state.periods[0].rates, 4
        )
        np.testing.assert_allclose(out, out.T)


class TestSampleObservations:
    def test_zero_trials_gives_zero_matrix(self, rng):
        net = make_network(3, {(0, 1): 1})
        rates = RateParams(0.2, 0.5, 0.8, 0.1)
        om = sample_observations(net, Partition.single_group(3), rates, 0, rng)
        assert om.counts.sum() == 0

    def test_forced_success_rate_saturates(self, rng):
        # with p close to 1 inside a group, nearly every slot is a hit
        net = make_network(2, {(0, 1): 1})
        rates = RateParams(0.1, 0.5, 1 - 1e-12, 0.1)
        om = sample_observations(net, Partition.single_group(2), rates, 50, rng)
        assert om.counts[0, 1] == 50

    def test_mean_matches_expected_counts(self, rng):
        net = make_network(3, {(0, 1): 1, (1, 2): -1})
        part = Partition(np.array([1, 1, 2]))
        rates = RateParams(0.15, 0.45, 0.85, 0.07)
        t, reps = 8, 10_000
        target = expected_counts(net, part, rates, t)
        totals = np.zeros((3, 3))
        for _ in range(reps):
            totals += sample_observations(net, part, rates, t, rng).counts
        mean = totals / reps
        iu, ju = np.triu_indices(3, 1)
        p = target[iu, ju] / t
        se = np.sqrt(t * p * (1 - p) / reps)
        assert np.all(np.abs(mean[iu, ju] - target[iu, ju]) < 3 * se)

    def test_simulated_counts_have_finite_likelihood(self, rng):
        net = make_network(4, {(0, 1): 1, (2, 3): -1})
        part = Partition(np.array([1, 1, 2, 2]))
        rates = RateParams(0.01, 0.5, 0.99, 0.02)
        om = sample_observations(net, part, rates, 30, rng)
        value = log_likelihood(om, net, part, rates)
        assert math.isfinite(value)
