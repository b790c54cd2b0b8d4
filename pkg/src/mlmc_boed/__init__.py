"""Gradient-based Bayesian optimal experimental design.

Maximizes the expected information gain (EIG) of an experiment by projected
stochastic gradient ascent, driven by an unbiased gradient estimator built
from antithetic randomized multilevel Monte Carlo corrections.
"""

from .config import RunConfig, default_config
from .decay import DecayReport, DecayRow, decay_study, fit_beta
from .eig import (
    EigEstimate,
    eig_nested,
    eig_unbiased_mlmc,
    testcase_eig_closed,
    testcase_eig_upper,
    testcase_optimal_design,
)
from .errors import (
    ConfigurationError,
    ContractViolationError,
    DomainError,
    NumericalDomainError,
)
from .gradient import (
    CorrectionSample,
    GradientEstimate,
    InnerBatch,
    InnerRatio,
    correction_samples,
    delta_psi_antithetic,
    delta_psi_naive,
    inner_ratio,
    psi_standard,
    standard_gradient,
    unbiased_gradient,
)
from .levels import LevelWeights, expected_cost, sample_level
from .model import Design, ProblemModel
from .optim import (
    AmsGradState,
    BoxDomain,
    RobbinsMonroState,
    TraceRow,
    amsgrad_step,
    optimize,
    project,
    rm_step,
)
from .pk import PkParams, PkProblem, pk_mean_response
from .proposals import (
    LaplaceProposal,
    LaplaceProposalFactory,
    PriorProposalFactory,
    laplace_fit,
    laplace_fit_batch,
    make_proposal_factory,
)
from .testcase import TestCaseParams, TestCaseProblem, gain_g, gain_h

__all__ = [
    "AmsGradState",
    "BoxDomain",
    "ConfigurationError",
    "ContractViolationError",
    "CorrectionSample",
    "DecayReport",
    "DecayRow",
    "Design",
    "DomainError",
    "EigEstimate",
    "GradientEstimate",
    "InnerBatch",
    "InnerRatio",
    "LaplaceProposal",
    "LaplaceProposalFactory",
    "LevelWeights",
    "NumericalDomainError",
    "PkParams",
    "PkProblem",
    "PriorProposalFactory",
    "ProblemModel",
    "RobbinsMonroState",
    "RunConfig",
    "TestCaseParams",
    "TestCaseProblem",
    "TraceRow",
    "amsgrad_step",
    "correction_samples",
    "decay_study",
    "default_config",
    "delta_psi_antithetic",
    "delta_psi_naive",
    "eig_nested",
    "eig_unbiased_mlmc",
    "expected_cost",
    "fit_beta",
    "gain_g",
    "gain_h",
    "inner_ratio",
    "laplace_fit",
    "laplace_fit_batch",
    "make_proposal_factory",
    "optimize",
    "pk_mean_response",
    "project",
    "psi_standard",
    "rm_step",
    "sample_level",
    "standard_gradient",
    "testcase_eig_closed",
    "testcase_eig_upper",
    "testcase_optimal_design",
    "unbiased_gradient",
]

__version__ = "0.1.0"
