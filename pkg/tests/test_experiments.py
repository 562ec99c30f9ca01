import json
import math

import numpy as np
import pytest
from scipy.special import ndtr

from poissonflats.closedform import ModelParams, Window
from poissonflats.experiments import (ExperimentConfig, ks_statistic,
                                      run_experiment)


def _config(estimand, **kwargs):
    defaults = dict(params=ModelParams(3, 1), window=Window.ball(1.0),
                    estimand=estimand, grassmann_budget=2048,
                    offset_budget=4096)
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


class TestKsStatistic:
    def test_quantile_lattice(self):
        n = 200
        quantiles = np.arange(1, n + 1) / (n + 1)
        stat = ks_statistic(quantiles, lambda u: np.asarray(u))
        assert stat <= 1 / (n + 1) + 1e-12

    def test_single_sample_at_median(self):
        assert ks_statistic([0.0], ndtr) == pytest.approx(0.5, abs=1e-12)

    def test_uniform_sample_level(self):
        rng = np.random.default_rng(123)
        sample = rng.random(10_000)
        stat = ks_statistic(sample, lambda u: np.asarray(u))
        assert stat < 0.02

    def test_matches_scipy(self):
        from scipy import stats
        rng = np.random.default_rng(5)
        sample = rng.standard_normal(500)
        ours = ks_statistic(sample, ndtr)
        theirs = stats.kstest(sample, "norm").statistic
        assert ours == pytest.approx(theirs, abs=1e-12)

    def test_censored_endpoint(self):
        # 10 observations censored at 1.0 against Exp(1): ECDF is 0 on
        # [0, 1), so the supremum is attained at the censoring point
        stat = ks_statistic([], lambda u: 1 - np.exp(-np.asarray(u)),
                            n_total=10, sup_point=1.0)
        assert stat == pytest.approx(1 - math.exp(-1.0), abs=1e-12)


class TestMeanExperiment:
    def test_passes_at_reference_parameters(self):
        report = run_experiment(_config("mean", rho_grid=(1.0, 2.0),
                                        replications=2000, seed=101, workers=2))
        assert report.passed
        for row in report.per_rho:
            assert abs(row["z_score"]) <= 3.0
            assert row["rejected_parallel_pairs"] == 0

    def test_zero_threshold_degenerate(self):
        report = run_experiment(_config(
            "mean", params=ModelParams(3, 1, delta=0.0), replications=50,
            seed=3))
        row = report.per_rho[0]
        assert row["sample_mean"] == 0.0 and row["theory_mean"] == 0.0
        assert report.passed

    def test_scale_doubling_factor(self):
        report = run_experiment(_config("mean", rho_grid=(1.0, 2.0),
                                        replications=4000, seed=7, workers=2))
        lo, hi = report.per_rho
        ratio = hi["sample_mean"] / lo["sample_mean"]
        se = ratio * math.hypot(hi["stderr"] / hi["sample_mean"],
                                lo["stderr"] / lo["sample_mean"])
        assert abs(ratio - 8.0) <= 3.0 * se


class TestVarianceExperiment:
    def test_kernel_oracle_agreement(self):
        report = run_experiment(_config("variance", rho_grid=(1.0,),
                                        replications=3000, seed=102, workers=2))
        assert report.passed
        row = report.per_rho[0]
        assert row["kernel_f2_term"] == pytest.approx(math.pi ** 2 / 3, rel=1e-12)
        assert row["variance_at_least_mean"]

    def test_report_contains_limit(self):
        report = run_experiment(_config("variance", rho_grid=(1.0,),
                                        replications=500, seed=9))
        assert report.summary["variance_limit"] == pytest.approx(
            math.pi ** 3 / 2, rel=1e-12)


class TestCltExperiment:
    def test_distance_shrinks_over_grid(self):
        report = run_experiment(_config("clt", rho_grid=(1.0, 2.0, 4.0),
                                        replications=800, seed=103, workers=2))
        assert report.passed
        distances = report.summary["distances"]
        assert distances[-1] < distances[0]
        assert report.summary["loglog_slope"] <= 0.0
        for row in report.per_rho:
            assert row["clt_bound"] >= row["kolmogorov_distance"]
            assert abs(row["standardized_mean"]) <= 3.0 / math.sqrt(800) * 1.5


class TestExtremesExperiment:
    def test_limit_law_at_moderate_scale(self):
        # rho = 8 per the convergence rate: at rho = 4 the shared-flat
        # clustering is still visible in the D_1 tail at these rep counts
        report = run_experiment(_config("extremes", rho_grid=(8.0,),
                                        replications=800, seed=104, workers=2))
        assert report.passed and not report.inconclusive
        row = report.per_rho[0]
        assert row["censoring_fraction"] < 0.01
        assert row["ks_first_distance"] < 0.05
        assert row["beta"] == pytest.approx(math.pi ** 2 / 3, rel=1e-12)

    def test_tiny_window_is_inconclusive(self):
        report = run_experiment(_config("extremes", rho_grid=(1.0,),
                                        replications=100, seed=6, u_max=0.05,
                                        u_grid=(0.02, 0.05)))
        assert report.inconclusive

    def test_raw_rows_with_keep_raw(self):
        report = run_experiment(_config("extremes", rho_grid=(2.0,),
                                        replications=60, seed=8, keep_raw=True))
        rows = list(report.csv_rows())
        assert rows[0] == ["rho", "rep", "order", "rescaled_distance"]
        assert len(rows) > 1


class TestSigmaExperiment:
    def test_limit_law_at_moderate_scale(self):
        report = run_experiment(_config("sigma", rho_grid=(8.0,),
                                        replications=1200, seed=105, workers=2))
        assert report.passed and not report.inconclusive
        row = report.per_rho[0]
        assert row["ks_first_gap"] < 0.05
        assert row["symmetry_pass"]
        assert row["beta"] == pytest.approx(math.pi ** 2 / 3, rel=1e-12)
        assert len(row["covariances"]) > 0  # diagnostic only


class TestShellExperiment:
    def test_means_and_independence(self):
        report = run_experiment(_config("shells", replications=400, seed=106,
                                        workers=2, n_max=3))
        assert report.passed
        rows = report.per_rho[0]
        assert len(rows["shells"]) == 3
        occupied = report.summary["occupied_fraction_by_prefix"]
        assert all(b >= a for a, b in zip(occupied, occupied[1:]))

    def test_empty_grid(self):
        report = run_experiment(_config("shells", replications=10, seed=1,
                                        n_max=0))
        assert report.passed and report.per_rho == []


class TestDeterminism:
    @pytest.mark.parametrize("estimand,extra", [
        ("mean", {}),
        ("variance", {}),
        ("extremes", {"rho_grid": (2.0,)}),
        ("sigma", {"rho_grid": (2.0,)}),
        ("shells", {"n_max": 2}),
    ])
    def test_worker_count_never_changes_bytes(self, estimand, extra):
        kwargs = dict(replications=80, seed=11)
        kwargs.update(extra)
        solo = run_experiment(_config(estimand, workers=1, **kwargs))
        duo = run_experiment(_config(estimand, workers=2, **kwargs))
        assert solo.to_json() == duo.to_json()

    def test_json_round_trips(self):
        report = run_experiment(_config("mean", replications=50, seed=12))
        parsed = json.loads(report.to_json())
        assert parsed["estimand"] == "mean"
        assert parsed["config"]["seed"] == 12
        assert "workers" not in json.dumps(parsed)


class TestConfigValidation:
    def test_unsorted_grid_rejected(self):
        with pytest.raises(ValueError):
            _config("mean", rho_grid=(2.0, 1.0))

    def test_sub_one_scale_rejected(self):
        with pytest.raises(ValueError):
            _config("mean", rho_grid=(0.5,))

    def test_single_replication_rejected(self):
        with pytest.raises(ValueError):
            _config("mean", replications=1)

    def test_unknown_estimand_rejected(self):
        with pytest.raises(ValueError):
            _config("median")

    def test_unsorted_u_grid_rejected(self):
        with pytest.raises(ValueError):
            _config("extremes", u_grid=(0.5, 0.2))
