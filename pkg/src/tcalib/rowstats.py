"""Per-row sample statistics for a battery of one-sample t-tests.

Conventions: the variance uses divisor n (not n-1), the t statistic is
``sqrt(n) * mean / sqrt(s2)``, and the skewness is the third standardized
central moment ``m3 / s2**1.5`` -- all with divisor n.  Moments are computed
in two passes (mean first, then centered powers); one-pass update formulas
lose too much precision at the small n this package targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRowError, ShapeError


@dataclass(frozen=True)
class RowSummary:
    """Divisor-n moments and the t statistic of a single row."""

    mean: float
    s2: float
    t: float
    skew: float
    m4: float


@dataclass(frozen=True)
class TestBattery:
    """Vectorized summaries of an N x n data matrix.

    Degenerate (zero-variance) rows are flagged in ``degenerate``; their t
    and skew entries are NaN.  All rows share the replicate count ``n``.
    """

    __test__ = False  # despite the name, not a pytest class

    mean: np.ndarray
    s2: np.ndarray
    t: np.ndarray
    skew: np.ndarray
    m4: np.ndarray
    degenerate: np.ndarray
    n: int

    @property
    def n_tests(self) -> int:
        return self.mean.shape[0]

    def row(self, i: int) -> RowSummary:
        return RowSummary(
            mean=float(self.mean[i]),
            s2=float(self.s2[i]),
            t=float(self.t[i]),
            skew=float(self.skew[i]),
            m4=float(self.m4[i]),
        )

    def summaries(self) -> list[RowSummary]:
        return [self.row(i) for i in range(self.n_tests)]


def _validate_row(row) -> np.ndarray:
    arr = np.asarray(row, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"row must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ShapeError(f"row needs at least 2 observations, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("row contains non-finite values")
    return arr


def _is_constant(arr: np.ndarray) -> bool:
    # value comparison, not s2 == 0: the mean of n equal floats can round
    return bool(np.all(arr == arr.flat[0]))


def summarize_row(row) -> RowSummary:
    """Mean, divisor-n variance, t statistic, skewness and fourth moment.

    Raises :class:`DegenerateRowError` when the row is constant (t undefined).
    """
    arr = _validate_row(row)
    if _is_constant(arr):
        raise DegenerateRowError("row has zero variance; t statistic undefined")
    n = arr.shape[0]
    mean = float(arr.mean())
    d = arr - mean
    s2 = float((d * d).mean())
    if s2 == 0.0:  # spread below sqrt of the subnormal range underflows
        raise DegenerateRowError("row variance underflows; t statistic undefined")
    # skew from standardized deviations: m3/s2^1.5 without the cube underflow
    z = d / math.sqrt(s2)
    m4 = float((d * d * d * d).mean())
    return RowSummary(
        mean=mean,
        s2=s2,
        t=math.sqrt(n) * mean / math.sqrt(s2),
        skew=float((z * z * z).mean()),
        m4=m4,
    )


def moment_diagnostic(row) -> tuple[float, float]:
    """The pair (s2, m4) of divisor-n central moments, for bound checks.

    Unlike :func:`summarize_row` this accepts constant rows (returns zeros).
    """
    arr = _validate_row(row)
    mean = arr.mean()
    d = arr - mean
    if _is_constant(arr):
        return 0.0, 0.0
    return float((d * d).mean()), float((d * d * d * d).mean())


def _validate_matrix(data) -> np.ndarray:
    try:
        arr = np.asarray(data)
    except ValueError as exc:
        raise ShapeError(f"ragged input: {exc}") from exc
    if arr.dtype == object:
        raise ShapeError("ragged input: rows have differing lengths")
    arr = arr.astype(np.float64, copy=False)
    if arr.ndim != 2:
        raise ShapeError(f"expected an N x n matrix, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ShapeError("matrix needs at least one row")
    if arr.shape[1] < 2:
        raise ShapeError(f"rows need at least 2 observations, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains non-finite values")
    return arr


def summarize_matrix(data) -> TestBattery:
    """Row-wise :func:`summarize_row` over a matrix.

    Degenerate rows are flagged rather than fatal: real data matrices do
    contain constant rows, and downstream calibration skips them.
    """
    arr = _validate_matrix(data)
    n = arr.shape[1]
    mean = arr.mean(axis=1)
    d = arr - mean[:, None]
    s2 = (d * d).mean(axis=1)
    m4 = (d * d * d * d).mean(axis=1)
    degenerate = np.all(arr == arr[:, :1], axis=1) | (s2 == 0.0)
    s2 = np.where(degenerate, 0.0, s2)
    m4 = np.where(degenerate, 0.0, m4)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(degenerate, np.nan, math.sqrt(n) * mean / np.sqrt(s2))
        z = d / np.sqrt(np.where(degenerate, 1.0, s2))[:, None]
        skew = np.where(degenerate, np.nan, (z * z * z).mean(axis=1))
    return TestBattery(mean=mean, s2=s2, t=t, skew=skew, m4=m4, degenerate=degenerate, n=n)
