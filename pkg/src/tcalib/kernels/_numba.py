"""Numba kernel backend: njit/prange twins of the numpy implementation.

Parallelism is over rows (bootstrap) or fixed sample blocks (tail counts);
each unit owns its (key, counter) stream, so output is bit-identical for
any thread count.  The uint64 mixing below must stay in lockstep with
:mod:`tcalib.rng`.
"""

from __future__ import annotations

import os
import warnings

os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numba

# the workqueue layer is in use; the TBB version probe still warns on old TBB
warnings.filterwarnings(
    "ignore", message=".*TBB threading layer.*", category=numba.NumbaWarning
)
import numpy as np
from numba import njit, prange

from . import DIST_UNIFORM, MAX_ATTEMPTS

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_U53_INV = 1.0 / 9007199254740992.0

# fixed block count keeps tail-count partial sums independent of threading
_N_BLOCKS = 512


def set_threads(n_threads: int) -> int:
    limit = numba.config.NUMBA_NUM_THREADS
    used = min(n_threads, limit)
    numba.set_num_threads(used)
    return used


@njit(numba.float64(numba.uint64, numba.uint64), inline="always", cache=True)
def _u53(key, ctr):
    z = key + ctr * _GOLDEN + _GOLDEN
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    z = z ^ (z >> _U64(31))
    return np.float64(z >> _U64(11)) * _U53_INV


@njit(cache=True, parallel=True, nogil=True)
def _boot_tstats(centered, keys, n_boot, out):
    n_rows, n = centered.shape
    sqrt_n = np.sqrt(np.float64(n))
    stride = _U64(n * MAX_ATTEMPTS)
    for i in prange(n_rows):
        key = keys[i]
        row = centered[i]
        buf = np.empty(n, np.float64)
        for b in range(n_boot):
            base = _U64(b) * stride
            tval = np.nan
            for attempt in range(MAX_ATTEMPTS):
                ctr = base + _U64(attempt * n)
                allsame = True
                for j in range(n):
                    u = _u53(key, ctr + _U64(j))
                    v = row[np.int64(u * n)]
                    buf[j] = v
                    if v != buf[0]:
                        allsame = False
                if allsame:
                    continue
                s = 0.0
                for j in range(n):
                    s += buf[j]
                m = s / n
                ss = 0.0
                for j in range(n):
                    d = buf[j] - m
                    ss += d * d
                var = ss / n
                if var > 0.0:
                    tval = sqrt_n * m / np.sqrt(var)
                    break
            out[i, b] = tval


def bootstrap_tstats(centered: np.ndarray, keys: np.ndarray, n_boot: int) -> np.ndarray:
    out = np.empty((centered.shape[0], n_boot))
    _boot_tstats(centered, keys, np.int64(n_boot), out)
    return out


@njit(cache=True, parallel=True, nogil=True)
def _tail_hits(dist_id, n, n_mc, key, xs, partial):
    n_x = xs.shape[0]
    sqrt_n = np.sqrt(np.float64(n))
    sqrt12 = np.sqrt(12.0)
    block = (n_mc + _N_BLOCKS - 1) // _N_BLOCKS
    for blk in prange(_N_BLOCKS):
        lo = blk * block
        hi = min(n_mc, lo + block)
        buf = np.empty(n, np.float64)
        for s in range(lo, hi):
            base = _U64(s) * _U64(n)
            for j in range(n):
                u = _u53(key, base + _U64(j))
                if dist_id == DIST_UNIFORM:
                    buf[j] = (u - 0.5) * sqrt12
                else:
                    u2 = u * u
                    buf[j] = (u2 * u2 - 0.2) * 3.75
            m = 0.0
            for j in range(n):
                m += buf[j]
            m /= n
            ss = 0.0
            for j in range(n):
                d = buf[j] - m
                ss += d * d
            var = ss / n
            if var <= 0.0:
                continue
            tval = sqrt_n * m / np.sqrt(var)
            for k in range(n_x):
                if tval > xs[k]:
                    partial[blk, k] += 1


def tail_hit_counts(
    dist_id: int, n: int, n_mc: int, key: int, xs: np.ndarray
) -> np.ndarray:
    partial = np.zeros((_N_BLOCKS, xs.shape[0]), dtype=np.int64)
    _tail_hits(
        np.int64(dist_id), np.int64(n), np.int64(n_mc), np.uint64(key), xs, partial
    )
    return partial.sum(axis=0)
