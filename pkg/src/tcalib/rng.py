"""Counter-based random streams.

Every random draw in this package is a pure function of (key, counter),
both 64-bit: a splitmix64-style finalizer turns the combined state into a
uniform variate.  This buys two properties the simulation contracts need:

* results are bit-reproducible given a seed, independent of thread count
  and of how work is chunked, and
* resampling indices depend only on (seed, row index, draw counter), never
  on the data, so e.g. rescaling a row leaves its resample indices intact.

Three implementations of the same mixing function exist: the scalar one
here, a vectorized numpy one (`mix64_np`), and an njit twin inside the
numba kernel backend.  They agree bit for bit and tests enforce that.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

#: scales a 53-bit integer into [0, 1)
U53_INV = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int, mod 2**64."""
    z = (z + GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def mix64_np(z: np.ndarray) -> np.ndarray:
    """Vectorized twin of :func:`mix64` on uint64 arrays (wraps mod 2**64)."""
    z = z + np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def derive_key(seed: int, *parts: int) -> int:
    """Fold stream identifiers (tags, cell/replication/row indices) into an
    independent 64-bit key."""
    key = mix64(seed & _MASK)
    for p in parts:
        key = mix64(key ^ mix64(p & _MASK))
    return key


def row_keys(seed: int, *parts: int, n_rows: int) -> np.ndarray:
    """Per-row stream keys: ``derive_key(seed, *parts, i)`` for i in range(n_rows),
    as a uint64 array."""
    base = np.uint64(derive_key(seed, *parts))
    return mix64_np(base ^ mix64_np(np.arange(n_rows, dtype=np.uint64)))


def stream_uniform(key: int, counters: np.ndarray) -> np.ndarray:
    """Uniform [0,1) variates at the given counter positions (uint64 array)."""
    bits = mix64_np(np.uint64(key) + counters * np.uint64(GOLDEN))
    return (bits >> np.uint64(11)).astype(np.float64) * U53_INV
