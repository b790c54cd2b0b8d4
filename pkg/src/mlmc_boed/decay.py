"""Level-variance decay diagnostics.

Estimates the expected squared l2-norms of the fine-level psi variable and
of the multilevel correction variable at each level, and fits the decay
exponent beta_hat by least squares of log2 E||delta_psi_l||^2 on l over a
configurable range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError
from .gradient import correction_samples
from .levels import LevelWeights
from .model import Design, ProblemModel
from .rng import PHASE_DECAY, chunk_sizes, stream


@dataclass(frozen=True)
class DecayRow:
    level: int
    mean_sq_psi: float     # E || psi_{M_l} ||_2^2
    mean_sq_delta: float   # E || delta_psi_l ||_2^2
    n_samples: int


@dataclass(frozen=True)
class DecayReport:
    rows: list[DecayRow]
    beta_hat: float
    fit_range: tuple[int, int]
    reliable: bool


def fit_beta(rows: list[DecayRow], fit_range: tuple[int, int]) -> float:
    """Least-squares slope of -log2 mean_sq_delta on the level."""
    lo, hi = fit_range
    pts = [(r.level, r.mean_sq_delta) for r in rows if lo <= r.level <= hi]
    if len(pts) < 2:
        return float("nan")
    lv = np.array([p[0] for p in pts], dtype=float)
    ms = np.log2([p[1] for p in pts])
    slope = np.polyfit(lv, ms, 1)[0]
    return float(-slope)


def decay_study(
    model: ProblemModel,
    design: Design,
    levels: int,
    samples_per_level: int,
    weights: LevelWeights,
    proposal_factory,
    seed: int,
    *,
    antithetic: bool = True,
    fit_range: tuple[int, int] | None = None,
) -> DecayReport:
    """Empirical mean squares of psi_{M_l} and delta_psi_l for l = 0..levels-1."""
    if levels < 2:
        raise ContractViolationError("decay study needs at least 2 levels")
    rows = []
    for lvl in range(levels):
        sq_delta = 0.0
        sq_psi = 0.0
        done = 0
        # Chunk the outer samples so high levels stay within memory.
        cap = max(1, 2**22 // int(weights.inner_samples(lvl)))
        for i, n in enumerate(chunk_sizes(samples_per_level, chunk=cap)):
            rng = stream(seed, PHASE_DECAY, lvl * 100_000 + i)
            delta, psi = correction_samples(
                model, design, lvl, weights, proposal_factory, rng, n,
                antithetic=antithetic, with_psi_fine=True,
            )
            sq_delta += float((delta**2).sum())
            sq_psi += float((psi**2).sum())
            done += n
        rows.append(DecayRow(lvl, sq_psi / done, sq_delta / done, done))
    rng_fit = fit_range or (1, levels - 1)
    beta = fit_beta(rows, rng_fit)
    return DecayReport(
        rows=rows,
        beta_hat=beta,
        fit_range=rng_fit,
        reliable=samples_per_level >= 100,
    )
