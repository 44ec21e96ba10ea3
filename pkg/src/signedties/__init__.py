"""Inference of latent signed tie networks from pairwise interaction counts."""

from .model import (
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
from .sampler import (
    SampleSet,
    SamplerConfig,
    TemperatureLadder,
    run_chain,
    run_tempered,
    smart_init,
    sweep,
)
from .estimation import EdgeMarginals, edge_entropy, edge_marginals, posterior_mean
from .synthetic import SynthConfig, generate_instance, internal_edge_fraction
from .evaluation import (
    auc_one_vs_rest,
    brute_force_marginals,
    discrepancy,
    posterior_predictive,
)

__version__ = "0.1.0"
