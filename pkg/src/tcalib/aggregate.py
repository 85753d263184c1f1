"""Marginal aggregation: estimate a common null distribution across tests.

When the null distributions of all t statistics can be treated as one
distribution F, two estimators apply: the empirical CDF of the observed t
statistics themselves, and the average of per-row bootstrap CDFs.  The
average of N bootstrap CDFs with B resamples each equals the empirical CDF
of all N*B pooled T* values, which is how it is stored.

Two-sided p-values from an aggregated CDF use strict tail counts with the
add-one rule: (1 + #{v > |t|} + #{v < -|t|}) / (M + 1).  Strict counting
matters when t is itself one of the pooled values (the empirical-CDF
estimator): it makes thresholding at a level a reject the expected number
of rows exactly, floor/ceil(N*a).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .calibrate import BootstrapConfig, bootstrap_tstats_matrix
from .errors import ShapeError
from .rowstats import TestBattery


@dataclass(frozen=True)
class AggregatedCdf:
    """Right-continuous step CDF over a pooled sample.

    ``support`` is strictly increasing; ``counts[k]`` is the number of
    pooled values <= support[k]; ``total`` the pooled sample size.
    """

    kind: str
    support: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def cdf_values(self) -> np.ndarray:
        return self.counts / self.total

    def count_greater(self, x) -> np.ndarray:
        """#{v > x}, vectorized in x."""
        idx = np.searchsorted(self.support, x, side="right")
        below = np.where(idx > 0, self.counts[np.maximum(idx - 1, 0)], 0)
        return self.total - below

    def count_less(self, x) -> np.ndarray:
        """#{v < x}, vectorized in x."""
        idx = np.searchsorted(self.support, x, side="left")
        return np.where(idx > 0, self.counts[np.maximum(idx - 1, 0)], 0)

    def evaluate(self, x):
        """F(x) = P(V <= x) of the step function, vectorized."""
        return (self.total - self.count_greater(x)) / self.total


def _build_cdf(kind: str, values: np.ndarray) -> AggregatedCdf:
    support, mult = np.unique(values, return_counts=True)
    return AggregatedCdf(
        kind=kind,
        support=support,
        counts=np.cumsum(mult),
        total=int(values.size),
    )


def empirical_null_cdf(battery: TestBattery) -> AggregatedCdf:
    """Empirical CDF of the battery's t statistics (degenerate rows excluded)."""
    t = battery.t[~battery.degenerate]
    if t.size == 0:
        raise ShapeError("battery has no nondegenerate rows")
    return _build_cdf("empirical", t)


def aggregated_bootstrap_cdf(data, cfg: BootstrapConfig) -> AggregatedCdf:
    """Equal-weight pool of every row's B resampled t statistics.

    Degenerate rows are skipped with a warning and the pool size adjusts.
    """
    tmat = bootstrap_tstats_matrix(data, cfg)
    valid = ~np.isnan(tmat[:, 0])
    if not valid.all():
        warnings.warn(
            f"skipping {int((~valid).sum())} degenerate row(s) in the bootstrap pool",
            RuntimeWarning,
            stacklevel=2,
        )
    if not valid.any():
        raise ShapeError("no nondegenerate rows to pool")
    return _build_cdf("bootstrap_average", tmat[valid].ravel())


def p_value_aggregated(t, cdf: AggregatedCdf) -> float:
    """Two-sided p-value of t against an aggregated null CDF.

    Add-one strict-count rule; the smallest attainable value is
    1/(total+1), reached when |t| exceeds the whole support.
    """
    at = abs(float(t))
    tail = int(cdf.count_greater(at)) + int(cdf.count_less(-at))
    return (1.0 + tail) / (cdf.total + 1.0)


def p_values_aggregated(tstats, cdf: AggregatedCdf) -> np.ndarray:
    """Vectorized :func:`p_value_aggregated`; NaN t gives NaN."""
    ts = np.asarray(tstats, dtype=np.float64)
    at = np.abs(ts)
    safe = np.where(np.isnan(at), np.inf, at)
    tail = cdf.count_greater(safe) + cdf.count_less(-safe)
    p = (1.0 + tail) / (cdf.total + 1.0)
    return np.where(np.isnan(ts), np.nan, p)


def _pooled_p_values(tstats: np.ndarray, pooled_sorted: np.ndarray) -> np.ndarray:
    """Fast path of :func:`p_values_aggregated` on a raw sorted pool."""
    total = pooled_sorted.shape[0]
    at = np.abs(tstats)
    safe = np.where(np.isnan(at), np.inf, at)
    greater = total - np.searchsorted(pooled_sorted, safe, side="right")
    less = np.searchsorted(pooled_sorted, -safe, side="left")
    p = (1.0 + greater + less) / (total + 1.0)
    return np.where(np.isnan(tstats), np.nan, p)
