"""Deterministic seed derivation.

Every unit of parallel work (one repetition of one sweep point, one
payoff-grid cell) owns a private random stream whose seed is a stable
64-bit hash of the master seed and the unit's coordinates. Adding sweep
points or repetitions never perturbs the seeds of existing units, and
results are independent of scheduling and thread count.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1

# domain tags keep run streams and payoff-cell streams disjoint
DOMAIN_RUN = 0x2545F4914F6CDD1D
DOMAIN_REPLICATOR = 0x9E6C63D0976A0AF5


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def seed_for(master_seed: int, *indices: int) -> int:
    """Stable 64-bit hash of (master_seed, *indices)."""
    h = _splitmix64(master_seed & _MASK)
    for index in indices:
        h = _splitmix64(h ^ (index & _MASK))
    return h


def stream_for(master_seed: int, *indices: int) -> np.random.Generator:
    return np.random.default_rng(seed_for(master_seed, *indices))
