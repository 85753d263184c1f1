import math

import numpy as np
import pytest

from tcalib import (
    ExperimentGrid,
    FactorModelConfig,
    MeanMixtureConfig,
    accuracy_noise_floor,
    gen_dataset,
    gen_errors_factor,
    gen_errors_moving_average,
    gen_means,
    ld_ratio_validate,
    run_accuracy_experiment,
)
from tcalib.errors import ConfigError, ShapeError
from tcalib.simulate import DISTRIBUTIONS


class TestFactorModel:
    def test_config_validation(self):
        with pytest.raises(ConfigError):
            FactorModelConfig(n_tests=100, n_reps=6)  # not a multiple of 3
        with pytest.raises(ConfigError):
            FactorModelConfig(n_tests=600, n_reps=1)
        with pytest.raises(ConfigError):
            FactorModelConfig(n_tests=600, n_reps=6, case="III")

    def test_shape_and_determinism(self):
        cfg = FactorModelConfig(n_tests=60, n_reps=8, seed=4)
        eps = gen_errors_factor(cfg)
        assert eps.shape == (60, 8)
        assert np.array_equal(eps, gen_errors_factor(cfg))
        other = gen_errors_factor(FactorModelConfig(n_tests=60, n_reps=8, seed=5))
        assert not np.array_equal(eps, other)

    @pytest.mark.parametrize("case", ["I", "II"])
    def test_unit_moments(self, case):
        cfg = FactorModelConfig(n_tests=2100, n_reps=48, case=case, seed=0)
        eps = gen_errors_factor(cfg)
        total = eps.size  # > 1e5 cells
        assert abs(eps.mean()) <= 4.0 / math.sqrt(total)
        assert abs(eps.var() - 1.0) <= 0.05

    def test_chi_factor_skewness(self):
        # the standardized chi-square(6) construction has skewness sqrt(8/6)
        rng = np.random.default_rng(10)
        m, draws = 6, 1_000_000
        w = rng.standard_normal((draws, m))
        chi = ((w * w).sum(axis=1) - m) / math.sqrt(2 * m)
        skew = float(((chi - chi.mean()) ** 3).mean() / chi.var() ** 1.5)
        assert skew == pytest.approx(math.sqrt(8.0 / 6.0), abs=0.05)
        assert skew == pytest.approx(1.1547005383792515, abs=0.05)

    def test_within_group_correlation_stronger(self):
        cfg = FactorModelConfig(n_tests=600, n_reps=50, case="I", seed=3)
        eps = gen_errors_factor(cfg)
        corr = np.corrcoef(eps)
        g = 600 // 3
        within, between = [], []
        idx = np.arange(0, 600, 7)  # subsample pairs to keep it cheap
        for i in idx:
            for j in idx:
                if i >= j:
                    continue
                if i // g == j // g:
                    within.append(corr[i, j])
                else:
                    between.append(corr[i, j])
        assert np.mean(within) > np.mean(between)
        # the implied factor-model values are 0.0676 within, 0.0093 between
        assert np.mean(within) == pytest.approx(0.0676, abs=0.03)
        assert np.mean(between) == pytest.approx(0.0093, abs=0.02)


class TestMeans:
    def test_pure_point_mass(self):
        mu = gen_means(1000, MeanMixtureConfig(c=1.0, seed=1))
        assert np.all(mu == 0.0)

    def test_pure_double_exponential_ratio_two_event(self):
        # P(|mu| >= log 2) for a standard double exponential is exactly 1/2
        mu = gen_means(1_000_000, MeanMixtureConfig(c=0.0, seed=2))
        frac = float((np.abs(mu) >= math.log(2.0)).mean())
        assert frac == pytest.approx(0.5, abs=0.002)

    def test_half_mixture_zero_fraction(self):
        mu = gen_means(1_000_000, MeanMixtureConfig(c=0.5, seed=3))
        assert float((mu == 0.0).mean()) == pytest.approx(0.5, abs=0.002)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            MeanMixtureConfig(c=1.5)


class TestDataset:
    def test_zero_means_give_pure_errors(self):
        fac = FactorModelConfig(n_tests=30, n_reps=5, seed=7)
        data, mu = gen_dataset(fac, MeanMixtureConfig(c=1.0, seed=7))
        assert np.all(mu == 0.0)
        assert np.array_equal(data, gen_errors_factor(fac))

    def test_shifted_row(self):
        fac = FactorModelConfig(n_tests=3, n_reps=200, seed=1)
        override = np.array([10.0, 0.0, 0.0])
        data, mu = gen_dataset(fac, MeanMixtureConfig(c=1.0, seed=1), means=override)
        assert np.array_equal(mu, override)
        assert data[0].mean() == pytest.approx(10.0, abs=0.3)

    def test_size_mismatch(self):
        fac = FactorModelConfig(n_tests=30, n_reps=5, seed=1)
        with pytest.raises(ShapeError):
            gen_dataset(fac, MeanMixtureConfig(), means=np.zeros(7))

    def test_reproducible(self):
        fac = FactorModelConfig(n_tests=30, n_reps=5, case="II", seed=12)
        mcfg = MeanMixtureConfig(c=0.8, seed=13)
        d1, m1 = gen_dataset(fac, mcfg)
        d2, m2 = gen_dataset(fac, mcfg)
        assert np.array_equal(d1, d2) and np.array_equal(m1, m2)


class TestMovingAverage:
    def test_single_weight_is_iid_standard_normal(self):
        eps = gen_errors_moving_average([1.0], 100_000, 2, seed=5)
        assert abs(eps.mean()) < 0.01
        assert eps.var() == pytest.approx(1.0, abs=0.02)
        lag1 = np.corrcoef(eps[:-1, 0], eps[1:, 0])[0, 1]
        assert abs(lag1) < 0.02

    def test_two_weight_lag_one_autocorrelation(self):
        w = [1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0)]
        eps = gen_errors_moving_average(w, 100_000, 1, seed=6)
        assert eps.var() == pytest.approx(1.0, abs=0.02)
        lag1 = np.corrcoef(eps[:-1, 0], eps[1:, 0])[0, 1]
        assert lag1 == pytest.approx(0.5, abs=0.02)

    def test_normalization_is_scale_free(self):
        a = gen_errors_moving_average([1.0, 1.0], 500, 3, seed=9)
        b = gen_errors_moving_average([2.5, 2.5], 500, 3, seed=9)
        assert np.allclose(a, b, rtol=1e-12)

    def test_validation(self):
        with pytest.raises(ConfigError):
            gen_errors_moving_average([], 10, 2)
        with pytest.raises(ConfigError):
            gen_errors_moving_average([0.0], 10, 2)


class TestAccuracyExperiment:
    def test_oracle_rmse_near_binomial_floor(self):
        grid = ExperimentGrid(
            n_tests=(300,), n_reps=(6,), methods=("oracle",), replications=400, seed=21
        )
        report = run_accuracy_experiment(grid, MeanMixtureConfig(c=1.0, seed=21))
        cell = report.cells[0]
        floor = accuracy_noise_floor(300, cell.alpha_n)
        assert abs(cell.rmse_accuracy / floor - 1.0) <= 0.2
        assert abs(cell.mean_accuracy) <= 4.0 * floor / math.sqrt(400)

    def test_deterministic_report(self):
        grid = ExperimentGrid(
            n_tests=(30,),
            n_reps=(6,),
            methods=("normal", "student_t", "bootstrap", "agg_bootstrap"),
            replications=4,
            bootstrap_reps=150,
            seed=5,
        )
        r1 = run_accuracy_experiment(grid, MeanMixtureConfig(c=1.0, seed=5))
        r2 = run_accuracy_experiment(grid, MeanMixtureConfig(c=1.0, seed=5))
        assert r1.cells == r2.cells

    def test_rep_p_values_match_unchunked_matrix(self):
        # the chunked per-replication path must reproduce the one-shot
        # matrix construction and the public aggregated p-values exactly
        from tcalib import BootstrapConfig, bootstrap_p_values, bootstrap_tstats_matrix
        from tcalib import summarize_matrix
        from tcalib.aggregate import _pooled_p_values
        import tcalib.simulate as sim

        rng = np.random.default_rng(8)
        data = rng.standard_normal((33, 6))
        tstats = summarize_matrix(data).t
        p_boot, p_agg = sim._bootstrap_p_values_rep(data, tstats, 99, 120, True)
        tmat = bootstrap_tstats_matrix(data, BootstrapConfig(120, seed=99))
        assert np.array_equal(p_boot, bootstrap_p_values(tstats, tmat))
        assert np.array_equal(p_agg, _pooled_p_values(tstats, np.sort(tmat.ravel())))

    def test_cell_layout(self):
        grid = ExperimentGrid(
            n_tests=(30, 60), n_reps=(4, 6), methods=("normal", "student_t"),
            replications=2, seed=1,
        )
        report = run_accuracy_experiment(grid, MeanMixtureConfig(c=1.0, seed=1))
        assert len(report.cells) == 2 * 2 * 2
        assert {c.method for c in report.cells} == {"normal", "student_t"}

    def test_nonnull_means_raise_rejection_fraction(self):
        # with c<1 a slice of rows carries real effects, so every method
        # rejects more than under the full null
        grid = ExperimentGrid(
            n_tests=(300,), n_reps=(20,), methods=("student_t",),
            replications=20, seed=3,
        )
        null_rep = run_accuracy_experiment(grid, MeanMixtureConfig(c=1.0, seed=3))
        power_rep = run_accuracy_experiment(grid, MeanMixtureConfig(c=0.5, seed=3))
        assert (
            power_rep.cells[0].mean_rejected_fraction
            > 3.0 * null_rep.cells[0].mean_rejected_fraction
        )

    def test_grid_validation(self):
        with pytest.raises(ConfigError):
            ExperimentGrid(n_tests=(100,))  # not a multiple of 3
        with pytest.raises(ConfigError):
            ExperimentGrid(methods=("edgeworth",))
        with pytest.raises(ConfigError):
            ExperimentGrid(desk_scale=0.0)

    def test_cell_budgets(self):
        grid = ExperimentGrid.full_grid(desk_scale=0.01, seed=0)
        assert grid.cell_replications(600) == 10  # 600000/600 * 0.01
        assert grid.cell_boot_reps(0.02) == 100  # floor at 100
        full = ExperimentGrid.full_grid()
        assert full.cell_replications(6000) == 100
        assert full.cell_boot_reps(0.005) == 9000


class TestLdRatioValidate:
    def test_symmetric_tail_is_near_normal_at_moderate_depth(self):
        cells = ld_ratio_validate("uniform", 50, [0.5, 1.0], 150_000, seed=3)
        for cell in cells:
            assert cell.predicted_ratio == 1.0
            assert cell.measured_ratio == pytest.approx(1.0, abs=0.08)
            assert not cell.flagged

    def test_skewed_right_tail_shrinks_and_tracks_prediction(self):
        cells = ld_ratio_validate("upow4", 50, [0.5, 1.0, 1.5], 150_000, seed=4)
        ratios = [c.measured_ratio for c in cells]
        assert all(r < 1.0 for r in ratios)
        assert all(a > b for a, b in zip(ratios, ratios[1:]))
        for cell in cells:
            k3 = DISTRIBUTIONS["upow4"].skewness
            assert cell.predicted_ratio == pytest.approx(
                math.exp(-k3 * cell.x**3 / (3 * math.sqrt(50))), rel=1e-12
            )
            assert abs(cell.residual) < 0.2

    def test_zero_threshold_ratio_one(self):
        (cell,) = ld_ratio_validate("uniform", 10, [0.0], 80_000, seed=5)
        assert cell.measured_ratio == pytest.approx(1.0, abs=3.0 * cell.mc_se + 1e-9)

    def test_unresolvable_cells_flagged_not_fatal(self):
        cells = ld_ratio_validate("uniform", 10, [0.5, 4.5], 2_000, seed=6)
        assert not cells[0].flagged
        assert cells[1].flagged  # expected hits ~ 2000*3.4e-6 << 20

    def test_scaled_residual_definition(self):
        (cell,) = ld_ratio_validate("upow4", 30, [1.2], 50_000, seed=7)
        expected = cell.residual * math.sqrt(30) / (1.0 + 1.2) ** 2
        assert cell.scaled_residual == pytest.approx(expected, rel=1e-12)

    def test_unknown_distribution(self):
        with pytest.raises(ConfigError):
            ld_ratio_validate("cauchy", 10, [1.0], 100, seed=0)
