"""tcalib: calibration of large batteries of simultaneous t-tests.

Library layout:

* :mod:`tcalib.specfun`   -- tail-accurate Normal / Student t distribution
  functions and inverses;
* :mod:`tcalib.rowstats`  -- per-row moments and t statistics (divisor n);
* :mod:`tcalib.calibrate` -- per-test levels, Normal / Student t / bootstrap
  critical points and p-values;
* :mod:`tcalib.aggregate` -- pooled null-distribution estimators;
* :mod:`tcalib.select`    -- Bonferroni / Benjamini-Hochberg / classical
  selection, FDR estimate, closed-form level forecasts;
* :mod:`tcalib.simulate`  -- synthetic data generators, the level-accuracy
  experiment and the tail-ratio validator;
* :mod:`tcalib.kernels`   -- numba/numpy compute backends (env var
  ``TCALIB_KERNELS`` selects);
* :mod:`tcalib.cli`       -- the ``tcalib`` command-line tool.
"""

__version__ = "0.1.0"

from .aggregate import (
    AggregatedCdf,
    aggregated_bootstrap_cdf,
    empirical_null_cdf,
    p_value_aggregated,
    p_values_aggregated,
)
from .calibrate import (
    BootstrapConfig,
    CriticalPoints,
    PerTestLevel,
    bootstrap_critical,
    bootstrap_critical_points,
    bootstrap_p_value,
    bootstrap_p_values,
    bootstrap_tstat_sample,
    bootstrap_tstats_matrix,
    deviation_point,
    normal_critical,
    p_value,
    per_test_level,
    student_critical,
)
from .errors import (
    ConfigError,
    DegenerateRowError,
    ParseError,
    ResamplingError,
    ShapeError,
    TailRangeError,
    TcalibError,
)
from .rowstats import (
    RowSummary,
    TestBattery,
    moment_diagnostic,
    summarize_matrix,
    summarize_row,
)
from .select import (
    GfwerLevels,
    LevelForecast,
    SelectionOutcome,
    alpha_schedule,
    bh_select,
    bonferroni_select,
    classical_select,
    fdr_estimate,
    fwer_limit,
    gfwer,
    level_forecast,
    theoretical_beta,
)
from .simulate import (
    DISTRIBUTIONS,
    CellResult,
    ExperimentGrid,
    FactorModelConfig,
    LdRatioCell,
    MeanMixtureConfig,
    SimulationReport,
    accuracy_noise_floor,
    gen_dataset,
    gen_errors_factor,
    gen_errors_moving_average,
    gen_means,
    ld_ratio_validate,
    run_accuracy_experiment,
)
from .specfun import normal_quantile, normal_sf, student_t_quantile, student_t_sf
