"""Run configuration: a single JSON document with per-problem defaults.

``RunConfig`` is schema-validated at construction, serializes to JSON and
back as a fixed point, and carries defaults that reproduce the benchmark
settings of the two bundled problems (lognormal test case: Robbins-Monro
with Polyak averaging from xi0 = 1.5; pharmacokinetic model: AMSGrad from
the equispaced 15-point schedule on [0, 24] with the 0.9 level-0 weight
override and Laplace proposals).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .levels import LevelWeights
from .model import Design
from .optim import BoxDomain
from .pk import PkProblem
from .proposals import make_proposal_factory
from .testcase import XI_LOWER, TestCaseProblem

PROBLEMS = ("testcase", "pk")
ESTIMATORS = ("stdmc", "mlmc", "mlmc-naive")
PROPOSALS = ("prior", "laplace")
OPTIMIZERS = ("rm", "amsgrad")


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs besides the seed/thread-count overrides."""

    problem: str = "testcase"
    estimator: str = "mlmc"
    inner_m: int = 1          # M of the fixed-M estimator ("stdmc")
    tau: float = 1.5
    m0: int = 1
    w0: float | None = None   # optional level-0 mass override
    proposal: str = "prior"
    optimizer: str = "rm"
    rm_c: float = 5.0
    polyak: bool = True
    amsgrad_alpha: float = 0.004
    amsgrad_beta1: float = 0.9
    amsgrad_beta2: float = 0.999
    n_outer: int = 2000
    max_iters: int = 10_000
    seed: int = 0
    lower: list[float] = field(default_factory=list)   # empty = problem default
    upper: list[float] = field(default_factory=list)
    xi0: list[float] = field(default_factory=list)
    eig_every: int = 500
    eig_n_outer: int = 2000
    levels: int = 9
    samples_per_level: int = 10_000

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigurationError(f"unknown problem {self.problem!r}")
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"unknown estimator {self.estimator!r}")
        if self.proposal not in PROPOSALS:
            raise ConfigurationError(f"unknown proposal {self.proposal!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")
        for name in ("inner_m", "m0", "n_outer", "eig_every", "eig_n_outer",
                     "samples_per_level"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be a positive integer")
        if self.max_iters < 0 or self.levels < 0:
            raise ConfigurationError("max_iters and levels must be nonnegative")
        if self.tau <= 1.0:
            raise ConfigurationError("tau must exceed 1")
        if self.w0 is not None and not (0.0 < self.w0 <= 1.0):
            raise ConfigurationError("w0 must lie in (0, 1]")
        # Validate bound/initial-design shapes eagerly.
        self.make_design()

    # -- factories ---------------------------------------------------------

    def make_model(self):
        return TestCaseProblem() if self.problem == "testcase" else PkProblem()

    def make_design(self) -> Design:
        model = self.make_model()
        base = model.default_design()
        lower = np.asarray(self.lower, dtype=float) if self.lower else base.lower
        upper = np.asarray(self.upper, dtype=float) if self.upper else base.upper
        values = np.asarray(self.xi0, dtype=float) if self.xi0 else base.values
        try:
            return Design(values=values, lower=lower, upper=upper)
        except Exception as exc:
            raise ConfigurationError(str(exc)) from exc

    def make_box(self) -> BoxDomain:
        d = self.make_design()
        return BoxDomain(lower=d.lower, upper=d.upper)

    def make_weights(self) -> LevelWeights:
        return LevelWeights(m0=self.m0, tau=self.tau, w0_override=self.w0)

    def make_proposal_factory(self):
        return make_proposal_factory(self.proposal)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        valid = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - valid
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid JSON config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("config document must be a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, **kwargs) -> "RunConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self


def default_config(problem: str) -> RunConfig:
    """Benchmark settings for each bundled problem."""
    if problem == "testcase":
        return RunConfig(
            problem="testcase",
            estimator="mlmc",
            tau=1.5,
            m0=1,
            proposal="prior",
            optimizer="rm",
            rm_c=5.0,
            polyak=True,
            n_outer=2000,
            max_iters=10_000,
            xi0=[1.5],
            lower=[XI_LOWER],
            upper=[10.0],
        )
    if problem == "pk":
        return RunConfig(
            problem="pk",
            estimator="mlmc",
            tau=1.5,
            m0=1,
            w0=0.9,
            proposal="laplace",
            optimizer="amsgrad",
            amsgrad_alpha=0.004,
            n_outer=2000,
            max_iters=10_000,
            xi0=[float(j) for j in range(1, 16)],
            lower=[0.0] * 15,
            upper=[24.0] * 15,
        )
    raise ConfigurationError(f"unknown problem {problem!r}")
