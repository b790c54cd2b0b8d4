"""Deterministic random-stream derivation.

All estimators consume sub-streams derived from a single master seed through
``numpy.random.SeedSequence`` spawn keys.  A stream is identified by
``(master_seed, phase, index)``, so re-running any command with the same seed
reproduces every draw bit-for-bit regardless of how work is scheduled across
workers.
"""

from __future__ import annotations

import numpy as np

# Outer samples are processed in fixed-size chunks; each chunk owns one
# sub-stream.  The chunk size is part of the determinism contract: results
# depend on it, but never on the number of workers.
CHUNK_SIZE = 512

# Phase tags keep streams of different run stages disjoint.
PHASE_GRADIENT = 1
PHASE_EIG = 2
PHASE_DECAY = 3
PHASE_OPTIMIZE = 4


def stream(master_seed: int, phase: int, index: int) -> np.random.Generator:
    """Return the generator for sub-stream ``(phase, index)`` of ``master_seed``."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(phase, index))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(n: int, chunk: int = CHUNK_SIZE) -> list[int]:
    """Split ``n`` work items into fixed-size chunks (last one ragged)."""
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])
