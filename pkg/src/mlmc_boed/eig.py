"""Estimators of the expected information gain (EIG) itself.

Two Monte Carlo estimators share the sampling machinery of
:mod:`mlmc_boed.gradient`: a nested estimator with a fixed inner sample size
(bias O(1/M)) and a randomized-level debiased estimator whose corrections are
the log-marginal-likelihood analogue of the antithetic gradient corrections:

    phi_0     = log rho_self - log rhobar_{M0}
    dphi_l    = (log rhobar_a + log rhobar_b) / 2 - log rhobar_fine   (l > 0)

reweighted by 1 / w_l.  The closed forms for the lognormal test case are also
provided here for verification.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import log, sqrt

import numpy as np
from scipy.special import logsumexp

from .errors import ContractViolationError
from .gradient import _draw_outer
from .levels import LevelWeights
from .model import Design, ProblemModel
from .rng import PHASE_EIG, chunk_sizes, stream
from .testcase import TestCaseParams, gain_g, gain_h


@dataclass(frozen=True)
class EigEstimate:
    value: float        # nats
    std_error: float
    n_outer: int
    total_inner_cost: int


def _inner_log_weights(model, design, proposal_factory, theta, eps, y, m, rng):
    fitted = proposal_factory.fit(model, design, theta, eps, y)
    theta_in, corr = fitted.sample_inner(rng, m)
    return model.loglik(design, theta, eps, theta_in) + corr


def _self_loglik(model, design, theta, eps):
    return model.loglik(design, theta, eps, theta[:, None, :])[:, 0]


def _run_chunked(n_outer, seed, threads, chunk_fn, base_index=0):
    """Accumulate (sum, sum of squares, cost) of per-sample contributions."""
    sizes = chunk_sizes(n_outer)

    def work(i_n):
        i, n = i_n
        rng = stream(seed, PHASE_EIG, base_index + i)
        contrib, cost = chunk_fn(rng, n)
        return contrib.sum(), (contrib**2).sum(), cost

    jobs = list(enumerate(sizes))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]

    total = sum(r[0] for r in results)
    total_sq = sum(r[1] for r in results)
    cost = sum(r[2] for r in results)
    mean = total / n_outer
    var = max(total_sq / n_outer - mean**2, 0.0)
    se = sqrt(var / n_outer)
    return EigEstimate(value=mean, std_error=se, n_outer=n_outer, total_inner_cost=cost)


def eig_nested(
    model: ProblemModel,
    design: Design,
    n_outer: int,
    m_inner: int,
    proposal_factory,
    seed: int,
    *,
    threads: int = 1,
    base_index: int = 0,
) -> EigEstimate:
    """Fixed-M nested estimator: mean of log rho_self - log rhobar_M."""
    if n_outer < 1 or m_inner < 1:
        raise ContractViolationError("n_outer and m_inner must be at least 1")

    def chunk(rng, n):
        theta, eps, y = _draw_outer(model, design, n, rng)
        log_w = _inner_log_weights(model, design, proposal_factory, theta, eps, y, m_inner, rng)
        log_rho_bar = logsumexp(log_w, axis=-1) - log(m_inner)
        contrib = _self_loglik(model, design, theta, eps) - log_rho_bar
        return contrib, n * m_inner

    return _run_chunked(n_outer, seed, threads, chunk, base_index)


def eig_unbiased_mlmc(
    model: ProblemModel,
    design: Design,
    n_outer: int,
    weights: LevelWeights,
    proposal_factory,
    seed: int,
    *,
    threads: int = 1,
    base_index: int = 0,
) -> EigEstimate:
    """Randomized-level debiased EIG estimator with antithetic corrections."""
    if n_outer < 1:
        raise ContractViolationError("n_outer must be at least 1")

    def chunk(rng, n):
        levels = weights.sample_levels(rng, n)
        contrib = np.empty(n)
        cost = int(weights.inner_samples(levels).sum())
        for lvl in np.unique(levels):
            idx = np.flatnonzero(levels == lvl)
            m = int(weights.inner_samples(lvl))
            theta, eps, y = _draw_outer(model, design, idx.size, rng)
            log_w = _inner_log_weights(
                model, design, proposal_factory, theta, eps, y, m, rng
            )
            if lvl == 0:
                phi = (_self_loglik(model, design, theta, eps)
                       - (logsumexp(log_w, axis=-1) - log(m)))
            else:
                half = m // 2
                lse_f = logsumexp(log_w, axis=-1)
                lse_a = logsumexp(log_w[:, :half], axis=-1)
                lse_b = logsumexp(log_w[:, half:], axis=-1)
                # (log rhobar_a + log rhobar_b)/2 - log rhobar_fine
                phi = 0.5 * (lse_a + lse_b) - lse_f + log(2.0)
            contrib[idx] = phi / weights.weight(int(lvl))
        return contrib, cost

    return _run_chunked(n_outer, seed, threads, chunk, base_index)


# ---------------------------------------------------------------------------
# closed forms for the lognormal test case


def testcase_eig_closed(xi: float, params: TestCaseParams | None = None) -> float:
    """Exact EIG of the test case: 0.5 log((g^2 r + 1)(h^2 r + 1)), r = s0^2/se^2."""
    p = params or TestCaseParams()
    r = p.sigma0**2 / p.sigma_eps**2
    g, _ = gain_g(xi)
    h, _ = gain_h(xi)
    return 0.5 * log((g**2 * r + 1.0) * (h**2 * r + 1.0))


def testcase_eig_upper(xi: float, params: TestCaseParams | None = None) -> float:
    """Jensen upper bound: g^2 r + h^2 r."""
    p = params or TestCaseParams()
    r = p.sigma0**2 / p.sigma_eps**2
    g, _ = gain_g(xi)
    h, _ = gain_h(xi)
    return g**2 * r + h**2 * r


def testcase_optimal_design() -> float:
    """Interior maximizer of the test-case EIG."""
    return sqrt(log(3.0))
