"""Selection rules over p-values and closed-form level forecasts.

Rules: Bonferroni (reject p <= overall/N), Benjamini-Hochberg step-up
(largest i with p_(i) <= i*overall/N), and the classical fixed threshold
(reject p <= alpha_n).  The FDR of a classical selection is estimated as
N*alpha_n/k; feeding that estimate to Benjamini-Hochberg rejects at least
as many hypotheses, so the classical rule is the conservative one.

Level forecasts: when the sum of per-test levels converges to beta, the
family-wise error rate tends to 1-exp(-beta), and the chance of at least k
false rejections is bounded by beta/k with Poisson tail limit
P(Poisson(beta) >= k).  The skewness-aware beta uses the cosh average
``-log(1-alpha)/N * sum_i cosh(gamma^3 * skew_i / 3)`` where gamma is the
limit of log(N)/n^(1/3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special

#: overall levels with conventional rounded per-test levels 1.5*N^(-2/3)
_ALPHA_TABLE = {600: 0.02, 1800: 0.01, 6000: 0.005}


@dataclass(frozen=True)
class SelectionOutcome:
    """Rejected index set of one selection rule."""

    rejected: np.ndarray
    k: int
    rule: str
    threshold_used: float


class GfwerLevels(NamedTuple):
    bound: float
    poisson_limit: float


@dataclass(frozen=True)
class LevelForecast:
    """Closed-form level forecast: beta, its FWER limit, and generalized
    FWER levels per order k (parallel to ``ks``)."""

    beta: float
    fwer_limit: float
    ks: tuple[int, ...]
    gfwer: tuple[GfwerLevels, ...]


def _check_pvalues(p) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("p must be a nonempty 1-d vector")
    finite = arr[~np.isnan(arr)]
    if finite.size and (finite.min() < 0.0 or finite.max() > 1.0):
        raise ValueError("p-values must lie in [0, 1]")
    return arr


def _outcome(mask: np.ndarray, rule: str, threshold: float) -> SelectionOutcome:
    rejected = np.flatnonzero(mask)
    return SelectionOutcome(
        rejected=rejected, k=int(rejected.size), rule=rule, threshold_used=float(threshold)
    )


def bonferroni_select(p, overall) -> SelectionOutcome:
    """Reject every test with p <= overall/N."""
    arr = _check_pvalues(p)
    thr = float(overall) / arr.size
    with np.errstate(invalid="ignore"):
        return _outcome(arr <= thr, "bonferroni", thr)


def bh_select(p, overall) -> SelectionOutcome:
    """Benjamini-Hochberg step-up rule at FDR level ``overall``.

    Ties are broken by stable (p, index) order, so the rejected set is
    deterministic.
    """
    arr = _check_pvalues(p)
    n = arr.size
    order = np.argsort(arr, kind="stable")  # NaNs sort last and never pass
    sorted_p = arr[order]
    thresholds = float(overall) * np.arange(1, n + 1) / n
    with np.errstate(invalid="ignore"):
        passing = np.flatnonzero(sorted_p <= thresholds)
    if passing.size == 0:
        return SelectionOutcome(
            rejected=np.empty(0, dtype=np.intp), k=0, rule="bh", threshold_used=0.0
        )
    k = int(passing[-1]) + 1
    rejected = np.sort(order[:k])
    return SelectionOutcome(
        rejected=rejected, k=k, rule="bh", threshold_used=float(thresholds[k - 1])
    )


def classical_select(p, alpha_n) -> SelectionOutcome:
    """Reject every test with p <= alpha_n (fixed per-test threshold)."""
    arr = _check_pvalues(p)
    thr = float(alpha_n)
    with np.errstate(invalid="ignore"):
        return _outcome(arr <= thr, "classical", thr)


def fdr_estimate(k_selected: int, n_tests: int, alpha_n) -> float:
    """Estimated false discovery rate N*alpha_n/k of a classical selection,
    capped at 1.  Undefined (raises) when nothing was selected."""
    if k_selected < 1:
        raise ValueError("FDR estimate undefined with zero rejections")
    if n_tests < 1:
        raise ValueError("n_tests must be >= 1")
    return min(1.0, n_tests * float(alpha_n) / k_selected)


def theoretical_beta(skewnesses, gamma, alpha) -> float:
    """Skewness-aware limit of the summed per-test levels.

    ``-log(1-alpha)/N * sum_i cosh(gamma**3 * skew_i / 3)``; equals
    -log(1-alpha) whenever gamma or every skewness is zero.
    """
    skews = np.asarray(skewnesses, dtype=np.float64)
    if skews.ndim != 1 or skews.size == 0:
        raise ValueError("skewnesses must be a nonempty 1-d vector")
    gamma = float(gamma)
    if not math.isfinite(gamma) or gamma < 0.0:
        raise ValueError(f"gamma must be finite and >= 0, got {gamma!r}")
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha!r}")
    return -math.log1p(-alpha) * float(np.mean(np.cosh(gamma**3 * skews / 3.0)))


def fwer_limit(beta) -> float:
    """Limiting family-wise error rate 1 - exp(-beta)."""
    beta = float(beta)
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta!r}")
    return -math.expm1(-beta)


def gfwer(beta, k: int) -> GfwerLevels:
    """Generalized FWER at order k: Markov bound beta/k and Poisson limit.

    The Poisson limit P(Poisson(beta) >= k) reproduces :func:`fwer_limit`
    at k=1 and never exceeds the bound.
    """
    beta = float(beta)
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta!r}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    bound = min(1.0, beta / k)
    poisson_limit = float(special.gammainc(k, beta))  # = P(Poisson(beta) >= k)
    return GfwerLevels(bound=bound, poisson_limit=poisson_limit)


def level_forecast(skewnesses, gamma, alpha, ks=(1, 2, 3, 4, 5)) -> LevelForecast:
    """Bundle :func:`theoretical_beta`, :func:`fwer_limit` and :func:`gfwer`
    into one forecast.  The k=1 Poisson level always equals the FWER limit
    and levels are nonincreasing in k."""
    ks = tuple(int(k) for k in ks)
    if not ks:
        raise ValueError("ks must be nonempty")
    beta = theoretical_beta(skewnesses, gamma, alpha)
    return LevelForecast(
        beta=beta,
        fwer_limit=fwer_limit(beta),
        ks=ks,
        gfwer=tuple(gfwer(beta, k) for k in ks),
    )


def alpha_schedule(n_tests: int, exact: bool = False) -> float:
    """Per-test level 1.5*N^(-2/3); by default the conventional rounded
    values 0.02/0.01/0.005 at N=600/1800/6000."""
    if n_tests < 1:
        raise ValueError(f"n_tests must be >= 1, got {n_tests}")
    if not exact and n_tests in _ALPHA_TABLE:
        return _ALPHA_TABLE[n_tests]
    return 1.5 * float(n_tests) ** (-2.0 / 3.0)
