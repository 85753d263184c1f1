"""Synthetic data generators and the level-accuracy experiment.

Data model: observations Y_ij = mu_i + eps_ij for N tests by n replicates.
The error generator divides the tests into three equal groups; each group
shares a latent chi-square factor and all tests share a fourth one, giving
stronger within-group than between-group correlation while every eps_ij
keeps mean 0 and variance 1.  Mean effects come from a point-mass-at-zero /
double-exponential mixture.  A moving-average generator produces serially
dependent errors across the test index instead.

The accuracy experiment measures, per (N, n, method) cell, how close each
calibration method's rejection fraction under the full null is to the
per-test level alpha_N = 1.5*N^(-2/3): it records N1/(N*alpha_N) - 1 per
replication and reports its root mean square over replications.

Everything is driven by counter-based streams derived from one master
seed, so a report is a pure function of (grid, mean config, seed) -- the
same bytes for any thread count or chunking.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .aggregate import _pooled_p_values
from .calibrate import _TAG_BOOT, p_values_battery
from .errors import ConfigError, ShapeError
from .rng import derive_key, row_keys
from .rowstats import summarize_matrix
from .select import alpha_schedule, classical_select
from .specfun import normal_sf

_TAG_FACTOR = 2
_TAG_MEANS = 3
_TAG_MA = 4
_TAG_MC = 5
_TAG_REP = 6
_TAG_ORACLE = 7
_TAG_BOOTSEED = 8

#: methods the accuracy experiment understands ("oracle" draws exact
#: uniform p-values and serves as the sampling-noise floor)
EXPERIMENT_METHODS = ("normal", "student_t", "bootstrap", "agg_bootstrap", "oracle")

#: conventional resample counts per rounded per-test level
_BOOT_REPS_BY_LEVEL = {0.02: 2000, 0.01: 4000, 0.005: 9000}


def _check_seed(seed: int) -> int:
    if not 0 <= int(seed) < 2**64:
        raise ConfigError("seed must fit in 64 unsigned bits")
    return int(seed)


@dataclass(frozen=True)
class FactorModelConfig:
    """Grouped-factor error generator configuration.

    Case I fixes the loadings (a=0.25, b=0.1 for every test); Case II draws
    them per test from U(0, 0.4) and U(0, 0.2).  ``chi_df`` is the degrees
    of freedom of the standardized chi-square factors.
    """

    n_tests: int
    n_reps: int
    case: str = "I"
    chi_df: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.n_tests < 3 or self.n_tests % 3 != 0:
            raise ConfigError(
                f"n_tests must be a positive multiple of 3, got {self.n_tests}"
            )
        if self.n_reps < 2:
            raise ConfigError(f"n_reps must be >= 2, got {self.n_reps}")
        if self.case not in ("I", "II"):
            raise ConfigError(f"case must be 'I' or 'II', got {self.case!r}")
        if self.chi_df < 1:
            raise ConfigError(f"chi_df must be >= 1, got {self.chi_df}")
        _check_seed(self.seed)


@dataclass(frozen=True)
class MeanMixtureConfig:
    """Mean effects: 0 with probability c, else standard double exponential."""

    c: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= float(self.c) <= 1.0:
            raise ConfigError(f"c must lie in [0, 1], got {self.c!r}")
        _check_seed(self.seed)


@dataclass(frozen=True)
class ExperimentGrid:
    """Cells and budgets of one accuracy experiment.

    Per cell, replications default to ``replication_budget / N`` and the
    resample count to the conventional value for alpha_N, both scaled by
    ``desk_scale`` so the full grid can run at desk scale in minutes.
    Explicit ``replications`` / ``bootstrap_reps`` override the scaling.
    """

    n_tests: tuple[int, ...] = (600, 1800, 6000)
    n_reps: tuple[int, ...] = (6, 20, 50)
    methods: tuple[str, ...] = ("normal", "student_t", "bootstrap", "agg_bootstrap")
    replication_budget: int = 600_000
    replications: int | None = None
    bootstrap_reps: int | None = None
    desk_scale: float = 1.0
    case: str = "I"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "n_tests", tuple(int(v) for v in self.n_tests))
        object.__setattr__(self, "n_reps", tuple(int(v) for v in self.n_reps))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.n_tests or not self.n_reps or not self.methods:
            raise ConfigError("grid needs at least one N, one n and one method")
        for nt in self.n_tests:
            if nt < 3 or nt % 3 != 0:
                raise ConfigError(f"n_tests must be positive multiples of 3, got {nt}")
        for nr in self.n_reps:
            if nr < 2:
                raise ConfigError(f"n_reps must be >= 2, got {nr}")
        unknown = set(self.methods) - set(EXPERIMENT_METHODS)
        if unknown:
            raise ConfigError(
                f"unknown method(s) {sorted(unknown)}; choose from {EXPERIMENT_METHODS}"
            )
        if not (self.desk_scale > 0.0 and math.isfinite(self.desk_scale)):
            raise ConfigError(f"desk_scale must be positive, got {self.desk_scale!r}")
        if self.replication_budget < 1:
            raise ConfigError("replication_budget must be >= 1")
        if self.replications is not None and self.replications < 2:
            raise ConfigError("replications must be >= 2")
        if self.bootstrap_reps is not None and self.bootstrap_reps < 100:
            raise ConfigError("bootstrap_reps must be >= 100")
        if self.case not in ("I", "II"):
            raise ConfigError(f"case must be 'I' or 'II', got {self.case!r}")
        _check_seed(self.seed)

    @classmethod
    def full_grid(cls, desk_scale: float = 1.0, seed: int = 0, case: str = "I") -> "ExperimentGrid":
        """The conventional full grid: N in {600, 1800, 6000}, n in {6, 20, 50}."""
        return cls(desk_scale=desk_scale, seed=seed, case=case)

    def cell_replications(self, n_tests: int) -> int:
        if self.replications is not None:
            return self.replications
        return max(2, int(round(self.replication_budget * self.desk_scale / n_tests)))

    def cell_boot_reps(self, alpha_n: float) -> int:
        if self.bootstrap_reps is not None:
            return self.bootstrap_reps
        base = _BOOT_REPS_BY_LEVEL.get(alpha_n)
        if base is None:
            base = int(math.ceil(40.0 / alpha_n))  # keeps ~40 resamples in the tail
        return max(100, int(round(base * self.desk_scale)))


@dataclass(frozen=True)
class CellResult:
    """Accuracy summary of one (N, n, method) grid cell."""

    n_tests: int
    n_reps: int
    method: str
    alpha_n: float
    boot_reps: int
    replications: int
    mean_rejected_fraction: float
    mean_accuracy: float
    rmse_accuracy: float


@dataclass(frozen=True)
class SimulationReport:
    """All cell results plus the configuration that produced them."""

    cells: tuple[CellResult, ...]
    grid: ExperimentGrid
    c: float
    seed: int


def gen_errors_factor(cfg: FactorModelConfig) -> np.ndarray:
    """N x n matrix of unit-variance grouped-factor errors.

    Row i of group g gets ``(Z_ij + a_i*chi_jg + b_i*chi_j4) / norm`` with
    chi_jk standardized chi-square(chi_df) factors shared across the group
    (chi_j4 across everyone), so E eps = 0 and var eps = 1 exactly.
    """
    rng = np.random.Generator(np.random.Philox(key=derive_key(cfg.seed, _TAG_FACTOR)))
    n_tests, n_reps, m = cfg.n_tests, cfg.n_reps, cfg.chi_df
    z = rng.standard_normal((n_tests, n_reps))
    w = rng.standard_normal((n_reps, 4, m))
    chi = ((w * w).sum(axis=2) - m) / math.sqrt(2 * m)  # (n_reps, 4)
    if cfg.case == "I":
        a = np.full(n_tests, 0.25)
        b = np.full(n_tests, 0.1)
    else:
        a = rng.uniform(0.0, 0.4, size=n_tests)
        b = rng.uniform(0.0, 0.2, size=n_tests)
    group = np.repeat(np.arange(3), n_tests // 3)
    eps = z + a[:, None] * chi[:, group].T + b[:, None] * chi[:, 3][None, :]
    eps /= np.sqrt(1.0 + a * a + b * b)[:, None]
    return eps


def gen_means(n_tests: int, cfg: MeanMixtureConfig) -> np.ndarray:
    """Mean-effect vector: zero with probability c, else Laplace(0, 1)."""
    if n_tests < 1:
        raise ConfigError(f"n_tests must be >= 1, got {n_tests}")
    rng = np.random.Generator(np.random.Philox(key=derive_key(cfg.seed, _TAG_MEANS)))
    is_zero = rng.random(n_tests) < cfg.c
    draws = rng.laplace(0.0, 1.0, size=n_tests)
    return np.where(is_zero, 0.0, draws)


def gen_dataset(
    factor_cfg: FactorModelConfig,
    mean_cfg: MeanMixtureConfig,
    means: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Observations Y = mu + eps plus the true means, for truth-aware scoring.

    ``means`` overrides the generated mean vector (length must match).
    """
    eps = gen_errors_factor(factor_cfg)
    if means is None:
        mu = gen_means(factor_cfg.n_tests, mean_cfg)
    else:
        mu = np.asarray(means, dtype=np.float64)
        if mu.shape != (factor_cfg.n_tests,):
            raise ShapeError(
                f"means has shape {mu.shape}, expected ({factor_cfg.n_tests},)"
            )
    return mu[:, None] + eps, mu


def gen_errors_moving_average(
    weights, n_tests: int, n_reps: int, seed: int = 0
) -> np.ndarray:
    """Errors serially dependent across the test index.

    Column j is an independent moving average sum_k w_k * d_{i+k, j} of iid
    standard normal innovations, normalized to unit variance.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ConfigError("weights must be a nonempty 1-d vector")
    if not np.all(np.isfinite(w)) or not (w * w).sum() > 0.0:
        raise ConfigError("weights must be finite with positive squared sum")
    if n_tests < 1 or n_reps < 1:
        raise ConfigError("need n_tests >= 1 and n_reps >= 1")
    rng = np.random.Generator(np.random.Philox(key=derive_key(seed, _TAG_MA)))
    lag = w.size
    innov = rng.standard_normal((n_tests + lag - 1, n_reps))
    eps = np.zeros((n_tests, n_reps))
    for k in range(lag):
        eps += w[k] * innov[k : k + n_tests]
    return eps / math.sqrt(float((w * w).sum()))


def accuracy_noise_floor(n_tests: int, alpha_n: float) -> float:
    """Per-replication RMSE of N1/(N*alpha_N)-1 under exact independent
    p-values: sqrt((1-alpha_N)/(N*alpha_N))."""
    return math.sqrt((1.0 - alpha_n) / (n_tests * alpha_n))


def _rejections(p: np.ndarray, alpha_n: float) -> int:
    return classical_select(p, alpha_n).k


def run_accuracy_experiment(
    grid: ExperimentGrid, mean_cfg: MeanMixtureConfig
) -> SimulationReport:
    """Per-cell rejection accuracy of each calibration method.

    With c=1 (full null) the accuracy statistic N1/(N*alpha_N)-1 measures
    p-value quality; with c<1 the rejected fraction is still reported but
    mixes level and power.  Expectations are plain averages across
    replications.
    """
    methods = grid.methods
    need_boot = "bootstrap" in methods or "agg_bootstrap" in methods
    cells: list[CellResult] = []
    for ci, (n_tests, n_reps) in enumerate(
        itertools.product(grid.n_tests, grid.n_reps)
    ):
        alpha_n = alpha_schedule(n_tests)
        n_rep_runs = grid.cell_replications(n_tests)
        boot_reps = grid.cell_boot_reps(alpha_n)
        df = n_reps - 1
        acc = {m: np.empty(n_rep_runs) for m in methods}
        rejected = {m: np.empty(n_rep_runs) for m in methods}
        for r in range(n_rep_runs):
            rep_key = derive_key(grid.seed, _TAG_REP, ci, r)
            factor_cfg = FactorModelConfig(
                n_tests=n_tests,
                n_reps=n_reps,
                case=grid.case,
                seed=derive_key(rep_key, _TAG_FACTOR),
            )
            mu_cfg = MeanMixtureConfig(c=mean_cfg.c, seed=derive_key(rep_key, _TAG_MEANS))
            data, _ = gen_dataset(factor_cfg, mu_cfg)
            tstats = summarize_matrix(data).t

            pvals: dict[str, np.ndarray] = {}
            if "normal" in methods:
                pvals["normal"] = p_values_battery(tstats, "normal")
            if "student_t" in methods:
                pvals["student_t"] = p_values_battery(tstats, "student_t", df=df)
            if need_boot:
                boot_seed = derive_key(rep_key, _TAG_BOOTSEED)
                p_boot, p_agg = _bootstrap_p_values_rep(
                    data, tstats, boot_seed, boot_reps, "agg_bootstrap" in methods
                )
                if "bootstrap" in methods:
                    pvals["bootstrap"] = p_boot
                if "agg_bootstrap" in methods:
                    pvals["agg_bootstrap"] = p_agg
            if "oracle" in methods:
                rng_o = np.random.Generator(
                    np.random.Philox(key=derive_key(rep_key, _TAG_ORACLE))
                )
                pvals["oracle"] = rng_o.random(n_tests)

            for m in methods:
                n1 = _rejections(pvals[m], alpha_n)
                acc[m][r] = n1 / (n_tests * alpha_n) - 1.0
                rejected[m][r] = n1 / n_tests

        for m in methods:
            cells.append(
                CellResult(
                    n_tests=n_tests,
                    n_reps=n_reps,
                    method=m,
                    alpha_n=alpha_n,
                    boot_reps=boot_reps,
                    replications=n_rep_runs,
                    mean_rejected_fraction=float(rejected[m].mean()),
                    mean_accuracy=float(acc[m].mean()),
                    rmse_accuracy=float(np.sqrt((acc[m] ** 2).mean())),
                )
            )
    return SimulationReport(
        cells=tuple(cells), grid=grid, c=float(mean_cfg.c), seed=grid.seed
    )


def _bootstrap_p_values_rep(
    data: np.ndarray,
    tstats: np.ndarray,
    boot_seed: int,
    boot_reps: int,
    want_pooled: bool,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Per-row and (optionally) pooled bootstrap p-values for one replication.

    Streams match ``calibrate.bootstrap_tstats_matrix`` with seed
    ``boot_seed``; rows are processed in chunks to bound memory without
    changing any draw.
    """
    n_tests = data.shape[0]
    keys = row_keys(boot_seed, _TAG_BOOT, n_rows=n_tests)
    centered = data - data.mean(axis=1, keepdims=True)
    counts = np.zeros(n_tests, dtype=np.int64)
    pooled = np.empty(n_tests * boot_reps) if want_pooled else None
    chunk = max(1, 4_000_000 // boot_reps)
    for lo in range(0, n_tests, chunk):
        hi = min(n_tests, lo + chunk)
        tmat = kernels.bootstrap_tstats(
            np.ascontiguousarray(centered[lo:hi]), keys[lo:hi], boot_reps
        )
        counts[lo:hi] = (np.abs(tmat) >= np.abs(tstats[lo:hi])[:, None]).sum(axis=1)
        if pooled is not None:
            pooled[lo * boot_reps : hi * boot_reps] = tmat.ravel()
    p_boot = (1.0 + counts) / (boot_reps + 1.0)
    p_agg = None
    if pooled is not None:
        pooled.sort()
        p_agg = _pooled_p_values(tstats, pooled)
    return p_boot, p_agg


@dataclass(frozen=True)
class TailDistribution:
    """A standardized sampling distribution the tail validator can draw from."""

    name: str
    dist_id: int
    skewness: float


#: distributions available to :func:`ld_ratio_validate`: a symmetric bounded
#: one and a right-skewed bounded one (standardized fourth power of a
#: uniform; skewness exactly 18/13)
DISTRIBUTIONS = {
    "uniform": TailDistribution("uniform", kernels.DIST_UNIFORM, 0.0),
    "upow4": TailDistribution("upow4", kernels.DIST_UPOW4, 18.0 / 13.0),
}


@dataclass(frozen=True)
class LdRatioCell:
    """One grid point of the tail-ratio validation."""

    x: float
    n_hits: int
    measured_ratio: float
    predicted_ratio: float
    mc_se: float
    residual: float
    scaled_residual: float
    expected_count: float
    flagged: bool


def ld_ratio_validate(
    dist: str, n: int, xs, n_mc: int, seed: int = 0
) -> list[LdRatioCell]:
    """Measure P(T > x) / P(Z > x) against the skewness tail correction.

    For each x, draws ``n_mc`` samples of size ``n``, estimates the upper
    tail of the divisor-n t statistic and divides by the Normal tail; the
    prediction is exp(-skew * x^3 / (3*sqrt(n))).  ``scaled_residual`` is
    (measured/predicted - 1) * sqrt(n)/(1+x)^2, the natural units of the
    remaining error term.  Cells whose expected hit count falls below 20
    are flagged as unresolvable at this n_mc rather than failing.
    """
    if dist not in DISTRIBUTIONS:
        raise ConfigError(f"unknown distribution {dist!r}; choose from {sorted(DISTRIBUTIONS)}")
    spec_dist = DISTRIBUTIONS[dist]
    xs_arr = np.asarray(xs, dtype=np.float64)
    if xs_arr.ndim != 1 or xs_arr.size == 0:
        raise ConfigError("xs must be a nonempty 1-d vector")
    if not np.all(np.isfinite(xs_arr)) or np.any(xs_arr < 0.0):
        raise ConfigError("xs must be finite and >= 0")
    if n < 2 or n_mc < 1:
        raise ConfigError("need n >= 2 and n_mc >= 1")
    key = derive_key(seed, _TAG_MC, spec_dist.dist_id, n)
    hits = kernels.tail_hit_counts(spec_dist.dist_id, n, n_mc, key, xs_arr)
    cells = []
    for x, h in zip(xs_arr, hits):
        sf = normal_sf(float(x))
        predicted = math.exp(-spec_dist.skewness * x**3 / (3.0 * math.sqrt(n)))
        p_hat = h / n_mc
        measured = p_hat / sf
        mc_se = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n_mc) / sf
        expected = n_mc * sf * predicted
        residual = measured / predicted - 1.0
        cells.append(
            LdRatioCell(
                x=float(x),
                n_hits=int(h),
                measured_ratio=measured,
                predicted_ratio=predicted,
                mc_se=mc_se,
                residual=residual,
                scaled_residual=residual * math.sqrt(n) / (1.0 + x) ** 2,
                expected_count=expected,
                flagged=bool(expected < 20.0),
            )
        )
    return cells
