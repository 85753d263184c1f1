"""Hot numeric kernels with interchangeable numba and numpy backends.

The two expensive inner loops of the package live here:

* ``bootstrap_tstats``   -- per-row resampled t statistics (resampling with
  replacement, centered at the original row mean, divisor-n studentized);
* ``tail_hit_counts``    -- Monte-Carlo tail exceedance counts of the t
  statistic over millions of synthetic samples.

Backend selection: the environment variable ``TCALIB_KERNELS`` set to
``numba`` or ``numpy`` pins the backend; unset, numba is used when it
imports and the pure-numpy fallback otherwise.  ``set_backend``/
``active_backend`` override and inspect the choice at runtime.

Both backends consume identical counter-based index streams (see
:mod:`tcalib.rng`), so they agree to floating-point rounding (summation
order differs, hence not bit-for-bit across backends).  Within a backend,
output is bit-reproducible and independent of the thread count:
parallelism is over rows/fixed blocks, each with its own (key, counter)
stream, and cross-row reductions are integer-valued.

``benchmarks/backend_bench.py`` times one backend against the other.
"""

from __future__ import annotations

import os
import warnings

#: resamples that keep drawing a constant vector are retried this many times
MAX_ATTEMPTS = 100

#: distribution ids understood by ``tail_hit_counts``
DIST_UNIFORM = 0  # uniform, standardized: mean 0, variance 1, skewness 0
DIST_UPOW4 = 1  # fourth power of a uniform, standardized: skewness 18/13

_ENV_VAR = "TCALIB_KERNELS"
_backend_name: str | None = None
_impl = None


def _load(name: str):
    if name == "numpy":
        from . import _numpy as impl
    elif name == "numba":
        from . import _numba as impl
    else:
        raise ValueError(f"unknown kernel backend {name!r} (use 'numba' or 'numpy')")
    return impl


def _resolve_default() -> str:
    env = os.environ.get(_ENV_VAR)
    if env:
        return env.strip().lower()
    try:
        import numba  # noqa: F401

        return "numba"
    except ImportError:
        return "numpy"


def set_backend(name: str | None) -> str:
    """Pin the kernel backend ('numba' or 'numpy'); None re-resolves the default."""
    global _backend_name, _impl
    if name is None:
        name = _resolve_default()
    name = name.strip().lower()
    impl = _load(name)
    _backend_name, _impl = name, impl
    return name


def active_backend() -> str:
    """Name of the backend that will run the kernels."""
    if _backend_name is None:
        set_backend(None)
    return _backend_name


def _get_impl():
    if _impl is None:
        set_backend(None)
    return _impl


def set_threads(n_threads: int) -> int:
    """Request a thread count for kernel execution; returns the count in use.

    Clamped to what the runtime supports; the numpy backend is single
    threaded and always reports 1.  Results never depend on this value.
    """
    if n_threads < 1:
        raise ValueError("thread count must be >= 1")
    impl = _get_impl()
    return impl.set_threads(n_threads)


def bootstrap_tstats(centered, keys, n_boot: int):
    """(N, n_boot) matrix of resampled t statistics.

    ``centered``: N x n float64 matrix of rows already centered at their
    original mean; ``keys``: N uint64 stream keys, one per row.  Resamples
    drawing a constant vector are redrawn from the next counter block, up
    to MAX_ATTEMPTS; a row that exhausts the attempts (impossible for rows
    with two distinct values, probability ~3e-44 even for the worst
    nondegenerate row) raises ResamplingError.
    """
    import numpy as np

    from ..errors import ResamplingError

    centered = np.ascontiguousarray(centered, dtype=np.float64)
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    if centered.ndim != 2 or keys.shape != (centered.shape[0],):
        raise ValueError("centered must be (N, n) and keys (N,)")
    if n_boot < 1:
        raise ValueError("n_boot must be >= 1")
    out = _get_impl().bootstrap_tstats(centered, keys, int(n_boot))
    if np.isnan(out).any():
        raise ResamplingError(
            "resampling produced a constant vector %d times in a row" % MAX_ATTEMPTS
        )
    return out


def tail_hit_counts(dist_id: int, n: int, n_mc: int, key: int, xs):
    """Counts of Monte-Carlo t statistics exceeding each threshold in xs.

    Draws ``n_mc`` samples of size ``n`` from the distribution ``dist_id``
    and counts ``T > x`` per threshold; deterministic given (key, n, n_mc).
    """
    import numpy as np

    if dist_id not in (DIST_UNIFORM, DIST_UPOW4):
        raise ValueError(f"unknown distribution id {dist_id!r}")
    if n < 2 or n_mc < 1:
        raise ValueError("need n >= 2 and n_mc >= 1")
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    return _get_impl().tail_hit_counts(int(dist_id), int(n), int(n_mc), int(key), xs)


def warn_if_fallback() -> None:
    """Emit a one-line warning when numba was requested implicitly but missing."""
    if active_backend() == "numpy" and not os.environ.get(_ENV_VAR):
        warnings.warn(
            "numba not importable; using the slower pure-numpy kernel backend",
            RuntimeWarning,
            stacklevel=2,
        )
