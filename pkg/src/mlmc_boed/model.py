"""Abstract experimental-design problem: prior, noise, forward map, likelihood.

A :class:`ProblemModel` bundles everything an estimator needs: the prior over
the latent parameters theta, the observation-noise distribution, the
deterministic forward simulator ``y = f(design, theta, eps)``, and the
log-likelihood of a simulated observation under an alternative latent value
together with its total design-gradient (the "score", differentiated through
both the simulated observation and the likelihood's explicit design
dependence).

All operations are pure and vectorized: latent/noise arguments carry a
leading batch axis ``n`` and inner latent values carry axes ``(n, M)``.
Randomness never lives here; samplers receive an explicit generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError


@dataclass(frozen=True)
class Design:
    """A point in the design space with its box-feasible domain.

    Bounds may be infinite.  ``values`` must satisfy
    ``lower <= values <= upper`` componentwise.
    """

    values: np.ndarray
    lower: np.ndarray = field(default=None)  # type: ignore[assignment]
    upper: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        d = values.shape[0]
        lower = self.lower if self.lower is not None else np.full(d, -np.inf)
        upper = self.upper if self.upper is not None else np.full(d, np.inf)
        lower = np.broadcast_to(np.asarray(lower, dtype=float), (d,)).copy()
        upper = np.broadcast_to(np.asarray(upper, dtype=float), (d,)).copy()
        if d < 1:
            raise ContractViolationError("design must have at least one component")
        if not (np.all(lower <= values) and np.all(values <= upper)):
            raise ContractViolationError(
                f"design {values} violates box bounds [{lower}, {upper}]"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def replace(self, values: np.ndarray) -> "Design":
        return Design(values=np.asarray(values, dtype=float), lower=self.lower, upper=self.upper)


class ProblemModel:
    """Capability interface consumed by every estimator.

    Dimensions: ``d`` design parameters, ``s`` latent parameters, ``s_noise``
    noise components, ``t`` observation components.
    """

    d: int
    s: int
    s_noise: int
    t: int

    # -- sampling ---------------------------------------------------------
    def sample_prior(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` latent vectors from the prior, shape ``(n, s)``."""
        raise NotImplementedError

    def sample_noise(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` noise vectors, shape ``(n, s_noise)``."""
        raise NotImplementedError

    # -- densities --------------------------------------------------------
    def prior_logpdf(self, theta: np.ndarray) -> np.ndarray:
        """Prior log-density, batched over all leading axes of ``theta``."""
        raise NotImplementedError

    def prior_logpdf_derivs(self, theta: np.ndarray):
        """Return ``(logpdf, grad, hess)`` of the prior log-density.

        ``theta`` has shape ``(..., s)``; the outputs have shapes ``(...,)``,
        ``(..., s)`` and ``(..., s, s)``.
        """
        raise NotImplementedError

    # -- forward model ----------------------------------------------------
    def simulate(self, design: Design, theta: np.ndarray, eps: np.ndarray) -> np.ndarray:
        """Deterministic forward map ``y = f(design, theta, eps)``.

        ``theta``: shape ``(..., s)``; ``eps``: shape ``(..., s_noise)``;
        returns shape ``(..., t)``.
        """
        raise NotImplementedError

    def loglik_score(
        self,
        design: Design,
        theta: np.ndarray,
        eps: np.ndarray,
        theta_inner: np.ndarray,
    ):
        """Scored log-likelihood of the simulated observation under ``theta_inner``.

        The observation is ``y = simulate(design, theta, eps)``; the returned
        log-density is a density over observation space (all change-of-variable
        factors included), and the score is the *total* design-gradient,
        differentiating through ``y`` as well as the explicit design
        dependence of the likelihood.

        Shapes: ``theta (n, s)``, ``eps (n, s_noise)``, ``theta_inner
        (n, M, s)``; returns ``(log_rho (n, M), score (n, M, d))``.
        The self-evaluation at ``theta_inner = theta`` uses this same code
        path (pass ``theta[:, None, :]``).
        """
        raise NotImplementedError

    def loglik(self, design, theta, eps, theta_inner) -> np.ndarray:
        """Log-likelihood only (no score); default delegates to loglik_score."""
        return self.loglik_score(design, theta, eps, theta_inner)[0]

    # -- conveniences -----------------------------------------------------
    def self_loglik_score(self, design: Design, theta: np.ndarray, eps: np.ndarray):
        """``(log rho, score)`` at ``theta_inner = theta``, shapes ``(n,), (n, d)``."""
        log_rho, score = self.loglik_score(design, theta, eps, theta[:, None, :])
        return log_rho[:, 0], score[:, 0, :]

    def default_design(self) -> Design:
        raise NotImplementedError

    def _check_dims(self, design: Design, theta: np.ndarray, eps: np.ndarray):
        if design.dim != self.d:
            raise ContractViolationError(f"design has dim {design.dim}, expected {self.d}")
        if theta.shape[-1] != self.s:
            raise ContractViolationError(f"theta has dim {theta.shape[-1]}, expected {self.s}")
        if eps.shape[-1] != self.s_noise:
            raise ContractViolationError(
                f"eps has dim {eps.shape[-1]}, expected {self.s_noise}"
            )
