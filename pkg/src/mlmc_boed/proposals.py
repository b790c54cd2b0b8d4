"""Importance distributions for the inner expectation.

Two families are provided: the prior itself (importance correction is
identically zero) and a Gaussian fitted per outer sample by a Laplace
approximation of the posterior around the known outer latent value.

For the PK problem, with ``J = -grad gbar``, ``H = -hess gbar``,
``E = y - gbar(theta*)`` and ``S = diag(sigma1^2 gbar_j^2 + sigma2^2)``:

    theta_hat = theta* - (J'S^-1 J + sum_j H_j E_j / S_jj - prior_hess)^-1 J'S^-1 E
    Sigma_hat = (J(theta_hat)' S(theta_hat)^-1 J(theta_hat) - prior_hess)^-1

where S is evaluated at theta* in the first equation and rebuilt at
theta_hat in the second.  If either linear solve fails to be positive
definite, the prior is substituted as the proposal for that outer sample and
the event is counted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Design, ProblemModel
from .pk import PkProblem

LOG_2PI = float(np.log(2.0 * np.pi))


# ---------------------------------------------------------------------------
# fitted-proposal objects


class FittedPrior:
    """Inner sampling from the prior: log pi0 - log q == 0 identically."""

    n_fallback = 0

    def __init__(self, model: ProblemModel, n: int):
        self.model = model
        self.n = n

    def sample_inner(self, rng, m: int):
        theta = self.model.sample_prior(rng, self.n * m).reshape(self.n, m, self.model.s)
        return theta, np.zeros((self.n, m))


class FittedGaussian:
    """Per-outer-sample Gaussian proposals N(mean_i, cov_i).

    Rows flagged in ``fallback`` sample from the prior instead (their
    importance correction is exactly zero).
    """

    def __init__(self, model, means, chols, fallback=None):
        self.model = model
        self.n = means.shape[0]
        self.means = means
        self.chols = chols  # lower Cholesky factors, (n, s, s)
        self.fallback = (
            fallback if fallback is not None else np.zeros(self.n, dtype=bool)
        )
        self.n_fallback = int(self.fallback.sum())

    def sample_inner(self, rng, m: int):
        s = self.model.s
        z = rng.standard_normal((self.n, m, s))
        theta = self.means[:, None, :] + np.einsum("nij,nmj->nmi", self.chols, z)
        logdet = np.log(np.diagonal(self.chols, axis1=-2, axis2=-1)).sum(axis=-1)
        log_q = (-0.5 * s * LOG_2PI - logdet[:, None]
                 - 0.5 * (z**2).sum(axis=-1))
        corr = self.model.prior_logpdf(theta) - log_q
        if self.n_fallback:
            mask = self.fallback
            n_fb = self.n_fallback
            theta_fb = self.model.sample_prior(rng, n_fb * m).reshape(n_fb, m, s)
            theta[mask] = theta_fb
            corr[mask] = 0.0
        return theta, corr


# ---------------------------------------------------------------------------
# factories


class PriorProposalFactory:
    name = "prior"

    def fit(self, model, design, theta, eps, y):
        return FittedPrior(model, theta.shape[0])


class LaplaceProposalFactory:
    """Gaussian importance proposals from a per-outer-sample Laplace fit."""

    name = "laplace"

    def fit(self, model: ProblemModel, design: Design, theta, eps, y):
        means, covs, fallback = laplace_fit_batch(model, design, theta, y)
        chols = np.broadcast_to(np.eye(model.s), covs.shape).copy()
        ok = ~fallback
        if np.any(ok):
            try:
                chols[ok] = np.linalg.cholesky(covs[ok])
            except np.linalg.LinAlgError:
                for i in np.flatnonzero(ok):
                    try:
                        chols[i] = np.linalg.cholesky(covs[i])
                    except np.linalg.LinAlgError:
                        fallback[i] = True
        return FittedGaussian(model, means, chols, fallback)


# ---------------------------------------------------------------------------
# Laplace fit


@dataclass(frozen=True)
class LaplaceProposal:
    """Single-sample Gaussian posterior approximation."""

    mean: np.ndarray
    cov: np.ndarray
    chol: np.ndarray
    fallback: bool = False


def _solve_sym(mats, rhs):
    """Batched symmetric solve with a per-row fallback mask on failure."""
    n = mats.shape[0]
    out = np.zeros_like(rhs)
    bad = np.zeros(n, dtype=bool)
    try:
        out = np.linalg.solve(mats, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        for i in range(n):
            try:
                out[i] = np.linalg.solve(mats[i], rhs[i])
            except np.linalg.LinAlgError:
                bad[i] = True
    bad |= ~np.all(np.isfinite(out), axis=-1)
    return out, bad


def _inv_sym(mats):
    n = mats.shape[0]
    bad = np.zeros(n, dtype=bool)
    out = np.broadcast_to(np.eye(mats.shape[-1]), mats.shape).copy()
    try:
        out = np.linalg.inv(mats)
    except np.linalg.LinAlgError:
        for i in range(n):
            try:
                out[i] = np.linalg.inv(mats[i])
            except np.linalg.LinAlgError:
                bad[i] = True
    bad |= ~np.all(np.isfinite(out), axis=(-2, -1))
    return out, bad


def laplace_fit_batch(model, design: Design, theta_star, y):
    """Vectorized Laplace fit for ``n`` outer samples.

    ``model`` must expose ``observation_derivs`` / ``observation_variance``
    alongside the usual prior derivatives.  Returns
    ``(means (n,s), covs (n,s,s), fallback (n,))``.
    """
    theta_star = np.asarray(theta_star, dtype=float)
    y = np.asarray(y, dtype=float)

    gbar, grad, hess = model.observation_derivs(design, theta_star, second=True)
    J = -grad                                     # (n, t, s)
    H = -hess                                     # (n, t, s, s)
    s_eps = model.observation_variance(gbar)      # evaluated at theta* here
    E = y - gbar
    _, _, prior_hess = model.prior_logpdf_derivs(theta_star)

    JtSinvJ = np.einsum("ntj,nt,ntk->njk", J, 1.0 / s_eps, J)
    Hterm = np.einsum("ntjk,nt->njk", H, E / s_eps)
    A = JtSinvJ + Hterm - prior_hess
    b = np.einsum("ntj,nt->nj", J, E / s_eps)
    delta, bad = _solve_sym(A, b)
    means = theta_star - delta
    means[bad] = theta_star[bad]

    gbar_hat, grad_hat, _ = model.observation_derivs(design, means, second=False)
    J_hat = -grad_hat
    s_hat = model.observation_variance(gbar_hat)
    _, _, prior_hess_hat = model.prior_logpdf_derivs(means)
    prec = np.einsum("ntj,nt,ntk->njk", J_hat, 1.0 / s_hat, J_hat) - prior_hess_hat
    covs, bad_inv = _inv_sym(prec)
    fallback = bad | bad_inv
    return means, covs, fallback


def laplace_fit(design: Design, theta_star, y, pk: PkProblem) -> LaplaceProposal:
    """Single-sample Laplace fit (see :func:`laplace_fit_batch`)."""
    means, covs, fb = laplace_fit_batch(
        pk, design, np.asarray(theta_star)[None, :], np.asarray(y)[None, :]
    )
    if fb[0]:
        raise np.linalg.LinAlgError("Laplace fit failed positive-definiteness")
    return LaplaceProposal(mean=means[0], cov=covs[0], chol=np.linalg.cholesky(covs[0]))


def make_proposal_factory(name: str):
    if name == "prior":
        return PriorProposalFactory()
    if name == "laplace":
        return LaplaceProposalFactory()
    raise ValueError(f"unknown proposal family: {name!r}")
