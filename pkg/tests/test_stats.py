"""
Tests for the statistical checks on simulated passage times, driven by
synthetic samples with known answers.
"""

import json
import math
import os
import sys

import numpy as np
import pytest
from scipy import stats as scipy_stats

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from cylfpp.accumulator import MomentAccumulator
from cylfpp.errors import DegenerateSampleError, InsufficientDataError
from cylfpp.stats import (
    donsker_covariance_check,
    essential_moment_bound_check,
    ks_statistic,
    lyapounov_trend,
    mean_convergence_check,
    normality_diagnostics,
    qq_points,
    report_table,
    sandwich_and_domination_check,
    tail_geodesic_check,
    variance_scaling_check,
)
from cylfpp.weights import WeightDistribution

EXPONENTIAL = WeightDistribution.exponential(1.0)


def test_ks_statistic_matches_brute_force():
    x = np.random.default_rng(0).normal(size=200)
    best = 0.0
    for xi in x:
        below = sum(1 for xj in x if xj < xi) / x.size
        at_or_below = sum(1 for xj in x if xj <= xi) / x.size
        F = scipy_stats.norm.cdf(xi)
        best = max(best, abs(at_or_below - F), abs(F - below))
    assert ks_statistic(x) == pytest.approx(best, rel=1e-12)


def test_normality_calibration():
    """Gaussian samples pass at level 0.01 for at least 99 of 100 seeds."""
    passed = 0
    for seed in range(100):
        x = np.random.default_rng(seed).normal(4.0, 2.0, 500)
        passed += normality_diagnostics(x).passed
    assert passed >= 99


def test_normality_rejects_exponential():
    x = np.random.default_rng(1).exponential(size=1000)
    report = normality_diagnostics(x)
    assert report.ks_pvalue < 0.001
    assert not report.passed
    assert report.skewness > 1.0


def test_normality_is_affine_invariant():
    x = np.random.default_rng(2).normal(size=300)
    a = normality_diagnostics(x)
    b = normality_diagnostics(3.0 * x + 7.0)
    assert a.ks_statistic == pytest.approx(b.ks_statistic, abs=1e-12)
    assert a.skewness == pytest.approx(b.skewness, abs=1e-12)
    assert b.mean == pytest.approx(3.0 * a.mean + 7.0)


def test_normality_errors():
    with pytest.raises(DegenerateSampleError):
        normality_diagnostics([2.0] * 60)
    with pytest.raises(InsufficientDataError):
        normality_diagnostics(np.arange(49.0))


def test_skewness_check_is_optional():
    x = np.random.default_rng(3).normal(size=400)
    assert "skewness" not in normality_diagnostics(x).checks
    assert normality_diagnostics(x, max_abs_skewness=0.5).checks["skewness"]


def test_mean_convergence_deterministic():
    runs = {n: [2.0 * n] * 16 for n in (10, 20, 40)}
    report = mean_convergence_check(runs, mu=2.0, diameter=2)
    assert report.passed
    assert report.nu_hat == 2.0
    assert report.mean_per_n == [2.0, 2.0, 2.0]
    assert report.variance_per_n == [0.0, 0.0, 0.0]
    assert set(report.checks) == {"lower_linear", "upper_linear", "subadditivity", "fixed_graph_gap"}


def test_mean_convergence_linear_growth():
    """E[T_n] = 3n + 5 with Var = n."""
    rng = np.random.default_rng(4)
    runs = {n: rng.normal(3 * n + 5, math.sqrt(n), 400) for n in (50, 100, 200)}
    runs[100] = MomentAccumulator.from_values(runs[100])
    report = mean_convergence_check(runs, mu=3.5, diameter=2)
    assert report.passed
    assert report.nu_hat == pytest.approx(3.0, abs=0.05)
    assert [item["n"] for item in report.details["subadditivity"]] == [50, 100]


def test_mean_convergence_needs_two_lengths():
    with pytest.raises(InsufficientDataError):
        mean_convergence_check({10: [1.0, 2.0]})


def test_variance_scaling_linear():
    rng = np.random.default_rng(5)
    runs = {n: rng.normal(n, math.sqrt(2 * n), 2000) for n in (25, 50, 100)}
    report = variance_scaling_check(runs, edge_count=3)
    assert report.passed
    for ratio in report.variance_per_n:
        assert ratio == pytest.approx(2.0, abs=0.3)
    assert len(report.details["lower_constant"]) == 3


def test_variance_scaling_accumulators():
    rng = np.random.default_rng(6)
    runs = {n: MomentAccumulator.from_values(rng.normal(0, math.sqrt(n), 2000)) for n in (20, 40)}
    report = variance_scaling_check(runs)
    assert report.checks["positive"]
    assert report.checks["bounded"]


def test_variance_scaling_rejects_cubic_growth():
    rng = np.random.default_rng(7)
    runs = {n: rng.normal(0, n**1.5, 200) for n in (10, 20, 40)}
    report = variance_scaling_check(runs)
    assert not report.checks["bounded"]
    assert not report.passed


def test_variance_scaling_degenerate():
    report = variance_scaling_check({5: [5.0] * 10, 10: [10.0] * 10})
    assert report.checks == {"positive": False}
    assert report.details["degenerate"]
    with pytest.raises(InsufficientDataError):
        variance_scaling_check({5: [1.0, 2.0, 3.0], 10: [1.0, 2.0, 3.0, 4.0]})


def test_sandwich_violation():
    samples = {"T": [1.0, 2.0, 3.0], "a": [1.5, 1.0, 3.5], "t": [2.0, 3.0, 4.0]}
    report = sandwich_and_domination_check(samples, EXPONENTIAL, diameter=2)
    assert report.ordering_violations == [1]
    assert not report.checks["ordering"]
    assert not report.passed


def test_sandwich_good():
    samples = {"T": [1.0, 2.0, 3.0], "a": [1.5, 2.5, 3.5], "t": [2.0, 3.0, 4.0]}
    report = sandwich_and_domination_check(samples, EXPONENTIAL, diameter=2)
    assert report.passed
    assert report.ordering_violations == []
    # (2D)^2 E[omega^2] = 16 * 2
    assert report.details["gap_moment"]["bound"] == pytest.approx(32.0)
    assert report.details["gap_moment"]["empirical"] == pytest.approx(1.0)


def test_domination():
    rng = np.random.default_rng(8)
    small = 0.5 * rng.exponential(size=2000)
    large = rng.gamma(4.0, 1.0, 2000)
    report = sandwich_and_domination_check(
        {"Y": small, "S_mD": large}, EXPONENTIAL, diameter=2, block_count=3
    )
    assert report.passed
    assert report.checks["error_nonnegative"]
    assert report.checks["error_mean"]
    assert "ordering" not in report.checks

    report = sandwich_and_domination_check({"Y": large, "S_mD": small})
    assert not report.checks["domination"]
    assert report.details["domination"]["pvalue"] < 0.001


def test_sandwich_input_errors():
    with pytest.raises(InsufficientDataError):
        sandwich_and_domination_check({"pi": [1.0]})
    with pytest.raises(ValueError):
        sandwich_and_domination_check({"T": [1.0, 2.0], "t": [1.0]})


def brownian_paths(grid, n, nu, sigma2, count, seed):
    rng = np.random.default_rng(seed)
    widths = np.diff(np.concatenate([[0.0], grid]))
    B = np.cumsum(rng.normal(size=(count, len(grid))) * np.sqrt(widths), axis=1)
    return np.floor(n * np.asarray(grid)) * nu + math.sqrt(n * sigma2) * B


def test_donsker_synthetic():
    grid = [0.25, 0.5, 0.75, 1.0]
    paths = brownian_paths(grid, 400, 1.5, 0.7, 20000, seed=9)
    report = donsker_covariance_check(paths, grid, 400)
    assert report.max_deviation < 0.05
    assert report.checks["max_deviation"]
    assert report.nu_hat == pytest.approx(1.5, abs=0.01)
    assert report.sigma2_hat == pytest.approx(0.7, rel=0.05)
    assert len(report.increment_correlations) == 6
    for item in report.increment_correlations:
        assert abs(item["value"]) < 0.05
    for item in report.increment_variances:
        assert item["value"] == pytest.approx(0.25, abs=0.02)
    assert np.allclose(report.covariance, np.minimum.outer(grid, grid), atol=0.05)


def test_donsker_errors():
    grid = [0.5, 1.0]
    with pytest.raises(InsufficientDataError):
        donsker_covariance_check(brownian_paths(grid, 100, 1.0, 1.0, 100, seed=0), grid, 100)
    with pytest.raises(DegenerateSampleError):
        donsker_covariance_check(np.tile([50.0, 100.0], (600, 1)), grid, 100)
    with pytest.raises(ValueError):
        donsker_covariance_check(np.ones((600, 3)), grid, 100)


def test_tail_check():
    report = tail_geodesic_check({10: [10] * 50, 20: [20] * 50}, p=2)
    assert report.passed
    assert report.ratios == [1.0]
    assert report.moments == [1.0, 1.0]
    assert report.quantiles[10]["0.5"] == 1.0

    report = tail_geodesic_check({10: [10] * 50, 20: [60] * 50})
    assert not report.checks["tail_stability"]

    with pytest.raises(InsufficientDataError):
        tail_geodesic_check({})


def test_essential_moment_bound():
    rng = np.random.default_rng(10)
    t = rng.normal(10.0, 1.0, 1000)
    L = np.full(1000, 10.0)
    report = essential_moment_bound_check(t, L, EXPONENTIAL, p=2)
    # 4 * 10 * 2 + 2 * 10 * 2
    assert report.bound == pytest.approx(120.0)
    assert report.empirical == pytest.approx(1.0, abs=0.15)
    assert report.passed
    with pytest.raises(ValueError):
        essential_moment_bound_check(t, L, EXPONENTIAL, p=1.5)
    with pytest.raises(InsufficientDataError):
        essential_moment_bound_check(t, L[:10], EXPONENTIAL)


def test_lyapounov_trend():
    x = np.random.default_rng(11).exponential(size=500)
    trend = lyapounov_trend({10: (x, 8), 20: (x, 16), 40: (x, 32)}, 3)
    assert trend["ns"] == [10, 20, 40]
    assert trend["decreasing"]


def test_qq_points():
    x = np.random.default_rng(12).normal(size=1000)
    theoretical, empirical = qq_points(x)
    assert theoretical.shape == empirical.shape == (200,)
    assert np.all(np.diff(theoretical) > 0)
    assert np.all(np.diff(empirical) >= 0)
    theoretical, _ = qq_points(x[:60])
    assert theoretical.size == 60


def test_reports_serialize():
    rng = np.random.default_rng(13)
    reports = [
        normality_diagnostics(rng.normal(size=100)),
        mean_convergence_check({n: rng.normal(n, 1.0, 20) for n in (10, 20)}),
        sandwich_and_domination_check({"T": [1.0, 2.0], "t": [1.5, 2.5]}),
        tail_geodesic_check({10: [12, 14], 20: [22, 25]}),
    ]
    for report in reports:
        data = report.to_dict()
        assert data["passed"] == report.passed
        json.dumps(data)
        assert report_table("check", report).splitlines()[0].startswith("check: ")


if __name__ == "__main__":
    test_ks_statistic_matches_brute_force()
    test_normality_calibration()
    test_normality_rejects_exponential()
    test_normality_is_affine_invariant()
    test_mean_convergence_deterministic()
    test_mean_convergence_linear_growth()
    test_variance_scaling_linear()
    test_variance_scaling_rejects_cubic_growth()
    test_sandwich_violation()
    test_sandwich_good()
    test_domination()
    test_donsker_synthetic()
    test_tail_check()
    test_essential_moment_bound()
    test_lyapounov_trend()
    test_qq_points()
    test_reports_serialize()
    print("All tests passed!")
