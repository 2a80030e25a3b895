"""Portable counter-based uniform generator (SplitMix64).

Value ``i`` of stream ``seed`` is ``mix(seed + (i + 1) * GOLDEN)`` where ``mix``
is the SplitMix64 finalizer; the double is built from the top 53 bits. The
algorithm is fixed so that synthetic data, initializations and splits are
bit-identical on every platform.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)

_TO_UNIT = 1.0 / float(1 << 53)


def splitmix64(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Return ``count`` raw 64-bit outputs of stream ``seed`` starting at ``offset``."""
    base = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = base + idx * GOLDEN
        x = (x ^ (x >> np.uint64(30))) * MIX1
        x = (x ^ (x >> np.uint64(27))) * MIX2
        x = x ^ (x >> np.uint64(31))
    return x


def uniform(seed: int, count: int, lo: float = 0.0, hi: float = 1.0, offset: int = 0) -> np.ndarray:
    """Uniform doubles on ``[lo, hi)``."""
    bits = splitmix64(seed, count, offset) >> np.uint64(11)
    unit = bits.astype(np.float64) * _TO_UNIT
    out = lo + (hi - lo) * unit
    # rounding can land exactly on hi
    return np.minimum(out, np.nextafter(hi, lo))
