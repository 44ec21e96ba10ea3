"""Comparison methods: ordered-probit regression and a configuration-model
residual classifier.

The probit baseline sees a revealed fraction of true signs and regresses
an ordered latent score on the raw counts.  The configuration-model
baseline subtracts a degree-based expectation from the counts and signs
the residual; it has no "no tie" class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtr

from .model import ObservationMatrix, SignedNetwork


@dataclass
class ProbitModel:
    """Fitted ordered-probit parameters: slope and the two thresholds."""

    beta: float
    tau1: float
    tau2: float
    converged: bool = True
    degenerate: bool = False
    log_likelihood: float = math.nan

    def __post_init__(self):
        if not self.tau1 < self.tau2:
            raise ValueError("thresholds must satisfy tau1 < tau2")


@dataclass
class RevealMask:
    """Unordered pairs whose true sign is exposed to the regression."""

    pairs: frozenset
    omega: float

    def __post_init__(self):
        self.pairs = frozenset((min(i, j), max(i, j)) for i, j in self.pairs)
        if any(i == j for i, j in self.pairs):
            raise ValueError("self-pairs cannot be revealed")


def draw_reveal_mask(n: int, omega: float, rng: np.random.Generator) -> RevealMask:
    """Reveal round(omega * C(n,2)) distinct pairs uniformly at random."""
    if not 0.0 <= omega <= 1.0:
        raise ValueError("omega must lie in [0, 1]")
    iu, ju = np.triu_indices(n, 1)
    count = round(omega * iu.size)
    chosen = rng.choice(iu.size, size=count, replace=False)
    return RevealMask(frozenset(zip(iu[chosen].tolist(), ju[chosen].tolist())), omega)


def _ordered_probit_nll(params: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    beta, tau1, log_gap = params
    tau2 = tau1 + math.exp(log_gap)
    z = beta * x
    p = np.empty_like(z)
    p[y == -1] = ndtr(tau1 - z[y == -1])
    p[y == 0] = ndtr(tau2 - z[y == 0]) - ndtr(tau1 - z[y == 0])
    p[y == 1] = 1.0 - ndtr(tau2 - z[y == 1])
    return -float(np.sum(np.log(np.clip(p, 1e-300, None))))


def fit_ordered_probit(
    obs: ObservationMatrix,
    truth: SignedNetwork,
    mask: RevealMask,
    max_iter: int = 10_000,
    tol: float = 1e-8,
) -> ProbitModel:
    """Maximum-likelihood ordered probit on the revealed pairs.

    The threshold gap is optimized on a log scale so tau1 < tau2 holds by
    construction.  A mask whose revealed signs are all identical cannot pin
    both thresholds and comes back flagged degenerate.
    """
    pairs = sorted(mask.pairs)
    if not pairs:
        raise ValueError("the reveal mask is empty")
    if any(j >= obs.n for _, j in pairs):
        raise ValueError("mask pair out of range")
    x = np.array([obs.counts[i, j] for i, j in pairs], dtype=float)
    y = np.array([truth.signs[i, j] for i, j in pairs], dtype=int)

    if len(np.unique(y)) == 1:
        return ProbitModel(
            0.0, -1.0, 1.0, converged=True, degenerate=True,
            log_likelihood=-_ordered_probit_nll(np.array([0.0, -1.0, 0.0]), x, y),
        )

    scale = max(x.std(), 1.0)
    start = np.array([1.0 / scale, -0.5, 0.0])
    res = minimize(
        _ordered_probit_nll,
        start,
        args=(x, y),
        method="Nelder-Mead",
        options={"maxiter": max_iter, "xatol": tol, "fatol": tol},
    )
    beta, tau1, log_gap = res.x
    return ProbitModel(
        float(beta),
        float(tau1),
        float(tau1 + math.exp(log_gap)),
        converged=bool(res.success),
        degenerate=False,
        log_likelihood=-float(res.fun),
    )


def probit_scores(model: ProbitModel, obs: ObservationMatrix):
    """Class probabilities and hard labels for every pair.

    Returns (probs, labels): probs has shape (n, n, 3) ordered (-1, 0, +1);
    labels applies the threshold rule to the latent mean beta * X.
    """
    z = model.beta * obs.counts.astype(float)
    p_neg = ndtr(model.tau1 - z)
    p_zero = ndtr(model.tau2 - z) - p_neg
    p_pos = 1.0 - ndtr(model.tau2 - z)
    probs = np.stack([p_neg, p_zero, p_pos], axis=-1)
    labels = np.where(z <= model.tau1, -1, np.where(z <= model.tau2, 0, 1))
    np.fill_diagonal(labels, 0)
    return probs, labels.astype(np.int8)


def cm_residuals(obs: ObservationMatrix, standard_denominator: bool = False) -> np.ndarray:
    """Counts minus a degree-based expectation 0.5 * d d^T / (d^T d).

    ``standard_denominator`` switches the normalization to sum(d), the
    textbook weighted-configuration-model form, for comparison.
    """
    x = obs.counts.astype(float)
    d = x.sum(axis=1)
    norm = d.sum() if standard_denominator else float(d @ d)
    if norm == 0:
        raise ValueError("all-zero counts leave the expectation undefined")
    expected = 0.5 * np.outer(d, d) / norm
    residual = x - expected
    np.fill_diagonal(residual, 0.0)
    return residual


def cm_classify(residuals: np.ndarray) -> SignedNetwork:
    """Positive where the residual is positive, negative otherwise."""
    signs = np.where(residuals > 0, 1, -1).astype(np.int8)
    signs = np.triu(signs, 1)
    signs = signs + signs.T
    return SignedNetwork(signs)
