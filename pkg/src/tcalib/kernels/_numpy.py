"""Pure-numpy kernel backend.

Vectorized over resamples / Monte-Carlo samples; consumes the same
(key, counter) uniform streams as the numba backend.  Counter layout per
row: resample b, redraw attempt a, draw j sit at counter
``b*n*MAX_ATTEMPTS + a*n + j``, so redraws never shift other resamples'
streams and the two backends stay in lockstep.
"""

from __future__ import annotations

import math

import numpy as np

from ..rng import stream_uniform
from . import DIST_UNIFORM, MAX_ATTEMPTS

_SQRT12 = math.sqrt(12.0)
# values-per-chunk target keeps peak memory around a few hundred MB
_CHUNK_VALUES = 4_000_000


def set_threads(n_threads: int) -> int:
    return 1  # single threaded by construction


def _boot_row(row: np.ndarray, key: int, n_boot: int) -> np.ndarray:
    n = row.shape[0]
    sqrt_n = math.sqrt(n)
    offs = np.arange(n, dtype=np.uint64)[None, :]
    base = np.arange(n_boot, dtype=np.uint64)[:, None] * np.uint64(n * MAX_ATTEMPTS)
    tvals = np.full(n_boot, np.nan)
    pending = np.arange(n_boot)
    for attempt in range(MAX_ATTEMPTS):
        if pending.size == 0:
            break
        ctr = base[pending] + np.uint64(attempt * n) + offs
        u = stream_uniform(key, ctr)
        vals = row[(u * n).astype(np.int64)]
        m = vals.mean(axis=1)
        d = vals - m[:, None]
        var = (d * d).mean(axis=1)
        ok = ~np.all(vals == vals[:, :1], axis=1) & (var > 0.0)
        good = pending[ok]
        tvals[good] = sqrt_n * m[ok] / np.sqrt(var[ok])
        pending = pending[~ok]
    return tvals


def bootstrap_tstats(centered: np.ndarray, keys: np.ndarray, n_boot: int) -> np.ndarray:
    n_rows = centered.shape[0]
    out = np.empty((n_rows, n_boot))
    for i in range(n_rows):
        out[i] = _boot_row(centered[i], int(keys[i]), n_boot)
    return out


def tail_hit_counts(
    dist_id: int, n: int, n_mc: int, key: int, xs: np.ndarray
) -> np.ndarray:
    counts = np.zeros(xs.shape[0], dtype=np.int64)
    sqrt_n = math.sqrt(n)
    offs = np.arange(n, dtype=np.uint64)[None, :]
    chunk = max(1, _CHUNK_VALUES // n)
    start = 0
    while start < n_mc:
        m = min(chunk, n_mc - start)
        base = np.arange(start, start + m, dtype=np.uint64)[:, None] * np.uint64(n)
        u = stream_uniform(key, base + offs)
        if dist_id == DIST_UNIFORM:
            vals = (u - 0.5) * _SQRT12
        else:
            u2 = u * u
            vals = (u2 * u2 - 0.2) * 3.75
        mm = vals.mean(axis=1)
        d = vals - mm[:, None]
        var = (d * d).mean(axis=1)
        ok = var > 0.0
        tstat = sqrt_n * mm[ok] / np.sqrt(var[ok])
        for k in range(xs.shape[0]):
            counts[k] += int((tstat > xs[k]).sum())
        start += m
    return counts
