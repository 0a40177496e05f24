"""Counter-based random numbers.

Every variate is a pure function of ``(seed, stream, *counters)``, hashed with
splitmix64. Row k of a sampled matrix therefore never depends on how many
rows were drawn or in which order they were computed.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

STREAM_NORMAL_U1 = 1
STREAM_NORMAL_U2 = 2
STREAM_PHASE = 3
STREAM_TRIAL = 4


def splitmix64(x) -> np.ndarray:
    z = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _u64(v) -> np.ndarray:
    if isinstance(v, (int, np.integer)):
        return np.array(int(v) & MASK64, dtype=np.uint64)
    return np.asarray(v).astype(np.uint64)


def hash_counters(seed: int, stream: int, *counters) -> np.ndarray:
    h = splitmix64(_u64(seed))
    with np.errstate(over="ignore"):
        h = splitmix64(h + _u64(stream))
        for c in counters:
            h = splitmix64(h + _u64(c))
    return h


def mix(base_seed: int, index: int) -> int:
    """Derive an independent 64-bit seed for trial ``index``."""
    return int(hash_counters(base_seed, STREAM_TRIAL, index))


def uniform(seed: int, stream: int, *counters) -> np.ndarray:
    """Uniform variates on [0, 1) with 53 random bits."""
    h = hash_counters(seed, stream, *counters)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def normal(seed: int, *counters) -> np.ndarray:
    """Standard normal variates by Box-Muller (cosine branch)."""
    u1 = 1.0 - uniform(seed, STREAM_NORMAL_U1, *counters)  # (0, 1]
    u2 = uniform(seed, STREAM_NORMAL_U2, *counters)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def trial_seeds(base_seed: int, trials: int) -> list[int]:
    return [mix(base_seed, i) for i in range(trials)]
