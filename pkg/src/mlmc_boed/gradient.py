"""Monte Carlo estimators for the gradient of the expected information gain.

Building blocks:

* :func:`inner_ratio` -- self-normalized importance-weighted inner average,
  computed entirely in log space (the ratio of gradient sum to likelihood sum
  is a softmax-weighted average of scores, which is algebraically identical
  to the literal ratio but immune to underflow).
* :func:`psi_standard` -- the biased fixed-M nested MC gradient variable.
* :func:`correction_samples` -- the multilevel correction variable at one
  level, antithetic (two half-batches averaged) or naive (single half-batch).
* :func:`unbiased_gradient` -- the randomized-level debiased estimator that
  averages ``delta_psi_l / w_l`` over outer samples.

Outer samples are processed in fixed-size chunks, each owning its own
deterministic RNG sub-stream, so results are bit-reproducible for a fixed
master seed no matter how many workers are used.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ContractViolationError
from .levels import LevelWeights
from .model import Design, ProblemModel
from .rng import CHUNK_SIZE, PHASE_GRADIENT, chunk_sizes, stream

# Relative tolerance of the antithetic consistency assertions: the fine
# importance-weighted sums must equal the mean of the two half sums.
ANTITHETIC_RTOL = 1e-12


@dataclass(frozen=True)
class InnerBatch:
    """Log importance weights and scores of one inner sample batch."""

    log_weights: np.ndarray  # (M,): log rho + log pi0 - log q
    scores: np.ndarray       # (M, d)


@dataclass(frozen=True)
class InnerRatio:
    log_rho_bar: np.ndarray  # log of the importance-weighted likelihood average
    ratio: np.ndarray        # gradient-sum / likelihood-sum, a convex combination


@dataclass(frozen=True)
class CorrectionSample:
    delta: np.ndarray
    level: int
    cost: int


@dataclass(frozen=True)
class GradientEstimate:
    grad: np.ndarray
    n_outer: int
    total_cost: int
    per_sample_sq_norm_mean: float


def _ratio(log_w: np.ndarray, scores: np.ndarray):
    """Batched inner ratio: ``log_w (n, M)``, ``scores (n, M, d)``."""
    m = log_w.shape[-1]
    log_rho_bar = logsumexp(log_w, axis=-1) - np.log(m)
    shifted = log_w - log_w.max(axis=-1, keepdims=True)
    lin = np.exp(shifted)
    ratio = np.einsum("nm,nmd->nd", lin, scores) / lin.sum(axis=-1)[:, None]
    return log_rho_bar, ratio


def inner_ratio(batch: InnerBatch) -> InnerRatio:
    """Self-normalized inner average for a single outer sample."""
    log_w = np.atleast_1d(np.asarray(batch.log_weights, dtype=float))
    if log_w.size == 0:
        raise ContractViolationError("inner batch must contain at least one sample")
    scores = np.asarray(batch.scores, dtype=float).reshape(log_w.shape[0], -1)
    lrb, ratio = _ratio(log_w[None, :], scores[None, :, :])
    return InnerRatio(log_rho_bar=lrb[0], ratio=ratio[0])


def _check_antithetic(log_w: np.ndarray, scores: np.ndarray):
    """Assert the linear-space coupling identities between fine and half sums."""
    m = log_w.shape[-1]
    half = m // 2
    shift = log_w.max(axis=-1, keepdims=True)
    lin = np.exp(log_w - shift)
    den_f = lin.sum(axis=-1)
    den_ab = lin[:, :half].sum(axis=-1) + lin[:, half:].sum(axis=-1)
    assert np.allclose(den_f, den_ab, rtol=ANTITHETIC_RTOL, atol=0.0)
    num_f = np.einsum("nm,nmd->nd", lin, scores)
    num_ab = (np.einsum("nm,nmd->nd", lin[:, :half], scores[:, :half])
              + np.einsum("nm,nmd->nd", lin[:, half:], scores[:, half:]))
    scale = np.abs(num_f) + den_f[:, None]
    assert np.all(np.abs(num_f - num_ab) <= ANTITHETIC_RTOL * scale)


def delta_from_inner(log_w, scores, level: int, *, self_score=None, antithetic=True):
    """Correction variable from precomputed inner weights/scores.

    ``log_w (n, M)``, ``scores (n, M, d)`` with ``M = m0 * 2**level``.  For
    ``level == 0``, ``self_score (n, d)`` is required (the psi variable keeps
    its self term); for higher levels the self term cancels between fine and
    coarse and is never formed.
    """
    if level == 0:
        if self_score is None:
            raise ContractViolationError("level 0 requires the self-score term")
        _, ratio = _ratio(log_w, scores)
        return self_score - ratio
    half = log_w.shape[-1] // 2
    if __debug__:
        _check_antithetic(log_w, scores)
    _, ratio_f = _ratio(log_w, scores)
    _, ratio_a = _ratio(log_w[:, :half], scores[:, :half])
    if antithetic:
        _, ratio_b = _ratio(log_w[:, half:], scores[:, half:])
        return 0.5 * (ratio_a + ratio_b) - ratio_f
    return ratio_a - ratio_f


def _draw_outer(model: ProblemModel, design: Design, n: int, rng):
    theta = model.sample_prior(rng, n)
    eps = model.sample_noise(rng, n)
    y = model.simulate(design, theta, eps)
    return theta, eps, y


def _inner_weights(model, design, proposal_factory, theta, eps, y, m, rng):
    fitted = proposal_factory.fit(model, design, theta, eps, y)
    theta_in, corr = fitted.sample_inner(rng, m)
    log_rho, scores = model.loglik_score(design, theta, eps, theta_in)
    return log_rho + corr, scores, fitted


def psi_standard(model, design, n_outer, m_inner, proposal_factory, rng):
    """``n_outer`` i.i.d. draws of the biased fixed-M gradient variable, (n, d)."""
    theta, eps, y = _draw_outer(model, design, n_outer, rng)
    log_w, scores, _ = _inner_weights(
        model, design, proposal_factory, theta, eps, y, m_inner, rng
    )
    _, self_score = model.self_loglik_score(design, theta, eps)
    _, ratio = _ratio(log_w, scores)
    return self_score - ratio


def correction_samples(
    model, design, level, weights: LevelWeights, proposal_factory, rng,
    n_outer=1, *, antithetic=True, with_psi_fine=False,
):
    """``n_outer`` draws of the level-``level`` correction variable, (n, d).

    One (theta, eps) pair and one proposal fit per outer sample; every inner
    sample's likelihood/score is evaluated exactly once and shared between
    the fine and coarse averages.  With ``with_psi_fine`` the fine-level psi
    variable (used by the decay diagnostics) is returned alongside.
    """
    m = int(weights.inner_samples(level))
    theta, eps, y = _draw_outer(model, design, n_outer, rng)
    log_w, scores, _ = _inner_weights(
        model, design, proposal_factory, theta, eps, y, m, rng
    )
    self_score = None
    if level == 0 or with_psi_fine:
        _, self_score = model.self_loglik_score(design, theta, eps)
    delta = delta_from_inner(
        log_w, scores, level, self_score=self_score, antithetic=antithetic
    )
    if not with_psi_fine:
        return delta
    _, ratio_f = _ratio(log_w, scores)
    return delta, self_score - ratio_f


def delta_psi_antithetic(model, design, level, weights, proposal_factory, rng):
    """One antithetic correction draw as a :class:`CorrectionSample`."""
    delta = correction_samples(
        model, design, level, weights, proposal_factory, rng, 1, antithetic=True
    )
    return CorrectionSample(delta=delta[0], level=level, cost=int(weights.inner_samples(level)))


def delta_psi_naive(model, design, level, weights, proposal_factory, rng):
    """One naive (single coarse half) correction draw."""
    delta = correction_samples(
        model, design, level, weights, proposal_factory, rng, 1, antithetic=False
    )
    return CorrectionSample(delta=delta[0], level=level, cost=int(weights.inner_samples(level)))


def _gradient_chunk(model, design, weights, proposal_factory, rng, n, antithetic):
    levels = weights.sample_levels(rng, n)
    contrib = np.empty((n, model.d))
    cost = int(weights.inner_samples(levels).sum())
    for lvl in np.unique(levels):
        idx = np.flatnonzero(levels == lvl)
        delta = correction_samples(
            model, design, int(lvl), weights, proposal_factory, rng, idx.size,
            antithetic=antithetic,
        )
        contrib[idx] = delta / weights.weight(int(lvl))
    return contrib.sum(axis=0), (contrib**2).sum(axis=1).sum(), cost


def unbiased_gradient(
    model: ProblemModel,
    design: Design,
    n_outer: int,
    weights: LevelWeights,
    proposal_factory,
    seed: int,
    *,
    threads: int = 1,
    phase: int = PHASE_GRADIENT,
    base_index: int = 0,
    antithetic: bool = True,
) -> GradientEstimate:
    """Debiased randomized-level gradient estimate over ``n_outer`` samples.

    The level of each outer sample is drawn i.i.d. from ``weights``; each
    sample contributes ``delta_psi_l / w_l``.  Sub-streams are indexed by
    ``(seed, phase, base_index + chunk)``, making the result independent of
    ``threads``.
    """
    if n_outer < 1:
        raise ContractViolationError("n_outer must be at least 1")
    sizes = chunk_sizes(n_outer)

    def work(i_n):
        i, n = i_n
        rng = stream(seed, phase, base_index + i)
        return _gradient_chunk(
            model, design, weights, proposal_factory, rng, n, antithetic
        )

    jobs = list(enumerate(sizes))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]

    grad_sum = np.zeros(model.d)
    sq_sum = 0.0
    total_cost = 0
    for g, sq, cost in results:
        grad_sum += g
        sq_sum += sq
        total_cost += cost
    return GradientEstimate(
        grad=grad_sum / n_outer,
        n_outer=n_outer,
        total_cost=total_cost,
        per_sample_sq_norm_mean=sq_sum / n_outer,
    )


def standard_gradient(
    model: ProblemModel,
    design: Design,
    n_outer: int,
    m_inner: int,
    proposal_factory,
    seed: int,
    *,
    threads: int = 1,
    phase: int = PHASE_GRADIENT,
    base_index: int = 0,
) -> GradientEstimate:
    """Biased fixed-M nested MC gradient estimate, chunked like the MLMC one."""
    if n_outer < 1:
        raise ContractViolationError("n_outer must be at least 1")
    sizes = chunk_sizes(n_outer)

    def work(i_n):
        i, n = i_n
        rng = stream(seed, phase, base_index + i)
        psi = psi_standard(model, design, n, m_inner, proposal_factory, rng)
        return psi.sum(axis=0), (psi**2).sum(axis=1).sum(), n * m_inner

    jobs = list(enumerate(sizes))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]

    grad_sum = np.zeros(model.d)
    sq_sum = 0.0
    total_cost = 0
    for g, sq, cost in results:
        grad_sum += g
        sq_sum += sq
        total_cost += cost
    return GradientEstimate(
        grad=grad_sum / n_outer,
        n_outer=n_outer,
        total_cost=total_cost,
        per_sample_sq_norm_mean=sq_sum / n_outer,
    )
