"""Critical points and p-values for simultaneous t-tests.

Three calibration methods share one per-test level: for an overall level
alpha over N tests, each test is run at ``1 - (1-alpha)**(1/N)``.  Normal
and Student t calibration solve for the scalar critical point of that
two-sided level; bootstrap calibration estimates a per-row critical point
from the resampled distribution of the row's own t statistic.

Bootstrap conventions (fixed here, since a finite-resample estimator has to
pick them): the critical point is the ceil(B*level)-th largest of |T*| --
the conservative order statistic, no interpolation -- and p-values use the
add-one rule (1 + #{|T*_b| >= |t|}) / (B + 1), which never returns 0.
Resampled statistics are centered at the original row mean and studentized
with the divisor-n standard deviation of the resample.

Everything is a pure function of (data, config); per-row randomness comes
from counter-based streams keyed by (seed, row index), so results do not
depend on execution order or thread count, and rescaling a row by c > 0
reuses identical resampling indices.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateRowError
from .rng import derive_key, row_keys
from .rowstats import _validate_matrix, _validate_row
from .specfun import (
    _normal_sf_raw,
    _student_t_sf_raw,
    normal_quantile,
    normal_sf,
    student_t_quantile,
    student_t_sf,
)

#: stream tag separating bootstrap draws from other consumers of a seed
_TAG_BOOT = 1

METHODS = ("normal", "student_t", "bootstrap")


@dataclass(frozen=True)
class PerTestLevel:
    """Per-test two-sided level 1-(1-alpha)^(1/N) for an overall level alpha."""

    alpha: float
    n_tests: int
    level: float


@dataclass(frozen=True)
class CriticalPoints:
    """Critical values of one calibration method.

    Scalar for normal/student_t; per-row vector for bootstrap (NaN entries
    mark degenerate rows).  ``df`` is set for the student_t method only.
    """

    method: str
    scalar: float | None = None
    per_row: np.ndarray | None = None
    df: int | None = None

    def __post_init__(self):
        if self.method == "bootstrap":
            if self.per_row is None or self.scalar is not None:
                raise ValueError("bootstrap critical points are per-row")
        elif self.method in ("normal", "student_t"):
            if self.scalar is None or self.per_row is not None:
                raise ValueError(f"{self.method} critical point is a scalar")
        else:
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class BootstrapConfig:
    """Resample count and stream seed for bootstrap calibration."""

    n_resamples: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.n_resamples < 100:
            raise ValueError(f"need at least 100 resamples, got {self.n_resamples}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


def per_test_level(alpha, n_tests: int) -> PerTestLevel:
    """Stable evaluation of 1-(1-alpha)^(1/N)."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha!r}")
    if n_tests < 1:
        raise ValueError(f"n_tests must be >= 1, got {n_tests}")
    level = -math.expm1(math.log1p(-alpha) / n_tests)
    return PerTestLevel(alpha=alpha, n_tests=int(n_tests), level=level)


def normal_critical(alpha, n_tests: int) -> CriticalPoints:
    """Scalar t_a with P(|Z| > t_a) equal to the per-test level."""
    lvl = per_test_level(alpha, n_tests).level
    return CriticalPoints(method="normal", scalar=normal_quantile(0.5 * lvl))


def student_critical(alpha, n_tests: int, df: int) -> CriticalPoints:
    """Scalar t_a with P(|T(df)| > t_a) equal to the per-test level."""
    lvl = per_test_level(alpha, n_tests).level
    return CriticalPoints(
        method="student_t", scalar=student_t_quantile(0.5 * lvl, df), df=int(df)
    )


def deviation_point(alpha_n) -> float:
    """The x with P(|Z| >= x) = alpha_n; how far in the tail a level reaches."""
    alpha_n = float(alpha_n)
    if not 0.0 < alpha_n < 1.0:
        raise ValueError(f"alpha_n must lie strictly inside (0, 1), got {alpha_n!r}")
    return normal_quantile(0.5 * alpha_n)


def _centered_valid_rows(data: np.ndarray, degenerate: np.ndarray) -> np.ndarray:
    centered = data - data.mean(axis=1, keepdims=True)
    return np.ascontiguousarray(centered[~degenerate])


def bootstrap_tstat_sample(row, cfg: BootstrapConfig, row_index: int = 0) -> np.ndarray:
    """B resampled t statistics T* for one row.

    Each T* comes from an independent with-replacement resample of the row,
    centered at the original row mean.  The stream key is (cfg.seed,
    row_index), so the sample is reproducible and scale-invariant.
    """
    arr = _validate_row(row)
    if np.all(arr == arr[0]):
        raise DegenerateRowError("cannot resample a zero-variance row")
    centered = (arr - arr.mean())[None, :]
    key = np.array([derive_key(cfg.seed, _TAG_BOOT, row_index)], dtype=np.uint64)
    return kernels.bootstrap_tstats(centered, key, cfg.n_resamples)[0]


def bootstrap_tstats_matrix(data, cfg: BootstrapConfig) -> np.ndarray:
    """(N, B) matrix of T* samples; rows of NaN mark degenerate input rows.

    Row i uses the same stream as ``bootstrap_tstat_sample(data[i], cfg, i)``.
    """
    arr = _validate_matrix(data)
    degenerate = np.all(arr == arr[:, :1], axis=1)
    out = np.full((arr.shape[0], cfg.n_resamples), np.nan)
    if not degenerate.all():
        keys = row_keys(cfg.seed, _TAG_BOOT, n_rows=arr.shape[0])[~degenerate]
        out[~degenerate] = kernels.bootstrap_tstats(
            _centered_valid_rows(arr, degenerate), keys, cfg.n_resamples
        )
    return out


def _upper_order_statistic(abs_tstats: np.ndarray, level: float) -> float:
    """ceil(B*level)-th largest value; the fuzz keeps e.g. 2000*0.02 at 40."""
    n_boot = abs_tstats.shape[0]
    k = int(math.ceil(n_boot * level - 1e-9))
    k = min(max(k, 1), n_boot)
    return float(np.partition(abs_tstats, n_boot - k)[n_boot - k])


def bootstrap_critical(row, alpha, n_tests: int, cfg: BootstrapConfig, row_index: int = 0) -> float:
    """Per-row bootstrap critical point: upper per-test-level quantile of |T*|."""
    lvl = per_test_level(alpha, n_tests).level
    if cfg.n_resamples * lvl < 1.0:
        warnings.warn(
            f"B*level = {cfg.n_resamples * lvl:.3g} < 1: the resample count cannot "
            "resolve this per-test level",
            RuntimeWarning,
            stacklevel=2,
        )
    sample = bootstrap_tstat_sample(row, cfg, row_index)
    return _upper_order_statistic(np.abs(sample), lvl)


def bootstrap_critical_points(data, alpha, n_tests: int, cfg: BootstrapConfig) -> CriticalPoints:
    """Vector of per-row bootstrap critical points (NaN for degenerate rows)."""
    lvl = per_test_level(alpha, n_tests).level
    tmat = bootstrap_tstats_matrix(data, cfg)
    points = np.full(tmat.shape[0], np.nan)
    for i in range(tmat.shape[0]):
        if not np.isnan(tmat[i, 0]):
            points[i] = _upper_order_statistic(np.abs(tmat[i]), lvl)
    return CriticalPoints(method="bootstrap", per_row=points)


def bootstrap_p_value(t: float, boot_sample: np.ndarray) -> float:
    """Add-one two-sided bootstrap p-value (1 + #{|T*| >= |t|}) / (B + 1)."""
    sample = np.asarray(boot_sample, dtype=np.float64)
    count = int((np.abs(sample) >= abs(t)).sum())
    return (1.0 + count) / (sample.shape[0] + 1.0)


def bootstrap_p_values(tstats, boot_matrix) -> np.ndarray:
    """Row-wise :func:`bootstrap_p_value`; NaN rows propagate NaN."""
    tstats = np.asarray(tstats, dtype=np.float64)
    boot_matrix = np.asarray(boot_matrix, dtype=np.float64)
    counts = (np.abs(boot_matrix) >= np.abs(tstats)[:, None]).sum(axis=1)
    p = (1.0 + counts) / (boot_matrix.shape[1] + 1.0)
    bad = np.isnan(tstats) | np.isnan(boot_matrix[:, 0])
    return np.where(bad, np.nan, p)


def p_value(t, method: str, df: int | None = None, boot_sample=None) -> float:
    """Two-sided observed significance of a t statistic under one method.

    normal: 2*P(Z > |t|); student_t: 2*P(T(df) > |t|); bootstrap: add-one
    fraction of the resampled |T*| at least |t|.
    """
    t = float(t)
    if method == "normal":
        return min(1.0, 2.0 * normal_sf(abs(t)))
    if method == "student_t":
        if df is None:
            raise ValueError("student_t p-value requires df")
        return min(1.0, 2.0 * student_t_sf(abs(t), df))
    if method == "bootstrap":
        if boot_sample is None:
            raise ValueError("bootstrap p-value requires boot_sample")
        return bootstrap_p_value(t, boot_sample)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def p_values_battery(tstats, method: str, df: int | None = None) -> np.ndarray:
    """Vectorized two-sided normal/student_t p-values; NaN passes through."""
    ts = np.abs(np.asarray(tstats, dtype=np.float64))
    if method == "normal":
        return np.minimum(1.0, 2.0 * _normal_sf_raw(ts))
    if method == "student_t":
        if df is None:
            raise ValueError("student_t p-values require df")
        return np.minimum(1.0, 2.0 * _student_t_sf_raw(ts, int(df)))
    raise ValueError(f"p_values_battery supports normal/student_t, got {method!r}")


__all__ = [
    "BootstrapConfig",
    "CriticalPoints",
    "PerTestLevel",
    "bootstrap_critical",
    "bootstrap_critical_points",
    "bootstrap_p_value",
    "bootstrap_p_values",
    "bootstrap_tstat_sample",
    "bootstrap_tstats_matrix",
    "deviation_point",
    "normal_critical",
    "p_value",
    "p_values_battery",
    "per_test_level",
    "student_critical",
]
