import math

import numpy as np
import pytest

from diff_sequences import covariance_matrix
from errors import ConfigurationError, DegenerateInputError, GapRangeError
from estimation import optimal_gap
import experiments
from experiments import (empirical_noise_cov, encode_stream, find_empirical_optimal_alpha,
                         run_mse, sweep_cells)
from models import ClockParams, ExperimentConfig, Mode, MseReport, SchedulePlan, Source

REFERENCE_PARAMS = ClockParams(beta0=0.0, beta1=1.01, d=0.0, sigma=0.1)


def plan(n_rounds):
    return SchedulePlan(n_rounds=n_rounds, h_step=10.0, g_step=10.0, t1_origin=0.0, t4_offset=5.0)


def small_config(alphas, modes=(Mode.GE1, Mode.GE2), n_trials=50, seed=3, params=REFERENCE_PARAMS, n_rounds=20):
    return ExperimentConfig(params=params, plan=plan(n_rounds), alphas=tuple(alphas), modes=tuple(modes),
                            n_trials=n_trials, seed=seed)


def test_stream_ids_depend_only_on_cell_and_trial():
    ids = {encode_stream(mode, 20, alpha, trial)
           for mode in (Mode.GE1, Mode.GE2, Mode.CLASSIC)
           for alpha in range(1, 20)
           for trial in range(5)}
    assert len(ids) == 3 * 19 * 5
    assert encode_stream(Mode.GE1, 20, 5, 3) == encode_stream(Mode.GE1, 20, 5, 3)


def test_cells_are_sorted_and_deduplicated():
    cells = sweep_cells(small_config([12, 3, 12], modes=(Mode.GE2, Mode.GE1, Mode.CLASSIC)))
    assert cells == [(Mode.GE1, 20, 3), (Mode.GE1, 20, 12), (Mode.GE2, 20, 3), (Mode.GE2, 20, 12),
                     (Mode.CLASSIC, 20, 19)]


def test_noiseless_cells_have_zero_mse():
    params = ClockParams(beta0=0.0, beta1=1.0, d=0.0, sigma=0.0)
    report = run_mse(small_config([3, 12], params=params, n_trials=20))
    for row in report.rows:
        assert row.mse == 0.0
        assert row.mean_beta1 == 1.0
        assert row.ci_half_width == 0.0
        assert row.crb == 0.0


def test_rows_carry_gap_validity_and_bound():
    report = run_mse(small_config([5, 12]))
    assert not report.get(Mode.GE1, 20, 5).correlation_free
    assert report.get(Mode.GE2, 20, 12).correlation_free
    for row in report.rows:
        assert row.mse >= 0
        assert row.n_trials == 50
        assert row.crb > 0


def test_report_is_independent_of_workers_and_order():
    serial = run_mse(small_config([1, 5, 10, 15]), workers=1)
    parallel = run_mse(small_config([15, 10, 5, 1]), workers=8)
    assert serial == parallel


def test_parallel_cells_run_in_worker_processes(monkeypatch):
    expected = run_mse(small_config([5, 12], n_trials=20))

    def in_process_only(config, cell):
        raise AssertionError("cell ran in the parent process")

    # Spawned workers import a fresh module and never see this patch
    monkeypatch.setattr(experiments, "run_cell", in_process_only)
    assert run_mse(small_config([5, 12], n_trials=20), workers=2) == expected


def test_gap_outside_sweep_range():
    with pytest.raises(GapRangeError):
        run_mse(small_config([25]))


def test_invalid_trial_count():
    with pytest.raises(ConfigurationError):
        run_mse(small_config([5], n_trials=0))


def test_degenerate_trials_flag_the_cell_and_spare_the_run(monkeypatch):
    real_estimate = experiments.estimate_skew

    def failing_for_ge2(diffs):
        if diffs.source is Source.GE2:
            raise DegenerateInputError("forced")
        return real_estimate(diffs)

    monkeypatch.setattr(experiments, "estimate_skew", failing_for_ge2)
    report = run_mse(small_config([12], n_trials=10))

    failed = report.get(Mode.GE2, 20, 12)
    assert failed.n_failed == 10
    assert math.isnan(failed.mse)
    assert "forced" in failed.error
    assert report.get(Mode.GE1, 20, 12).n_failed == 0
    assert report.failed_cells() == [failed]


def test_empirical_optimum_breaks_ties_toward_smaller_gap():
    params = ClockParams(beta0=0.0, beta1=1.0, d=0.0, sigma=0.0)
    alpha, mse = find_empirical_optimal_alpha(small_config([14, 11, 17], params=params, n_trials=5))
    assert (alpha, mse) == (11, 0.0)


def test_empirical_optimum_ignores_alpha_order():
    forward = find_empirical_optimal_alpha(small_config(range(10, 20), n_trials=30))
    backward = find_empirical_optimal_alpha(small_config(range(19, 9, -1), n_trials=30))
    assert forward == backward


def test_empirical_optimum_requires_valid_nonempty_sweep():
    with pytest.raises(GapRangeError):
        find_empirical_optimal_alpha(small_config([]))
    with pytest.raises(GapRangeError):
        find_empirical_optimal_alpha(small_config([5, 12]))


def test_noiseless_empirical_covariance_is_zero():
    params = ClockParams(beta0=0.0, beta1=1.0, d=0.0, sigma=0.0)
    estimate = empirical_noise_cov(params, plan(12), 3, 1000, seed=1)
    assert estimate.cov.shape == (9, 9)
    assert np.all(estimate.cov == 0)


def test_empirical_covariance_needs_enough_trials():
    with pytest.raises(ConfigurationError):
        empirical_noise_cov(REFERENCE_PARAMS, plan(12), 3, 999, seed=1)
    with pytest.raises(GapRangeError):
        empirical_noise_cov(REFERENCE_PARAMS, plan(12), 12, 1000, seed=1)


def _within_four_standard_errors(estimate, expected):
    deviation = np.abs(estimate.cov - expected)
    return np.all(deviation <= 4 * estimate.stderr)


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [3, 6, 11])
def test_empirical_covariance_matches_correlated_structure(alpha):
    sigma = 0.5
    params = ClockParams(beta0=1.0, beta1=1.01, d=0.5, sigma=sigma)
    estimate = empirical_noise_cov(params, plan(12), alpha, 100_000, seed=alpha)

    expected = covariance_matrix(alpha, 12, sigma)
    assert _within_four_standard_errors(estimate, expected)
    if alpha < 6:
        assert estimate.cov[alpha, 0] < 0
        assert abs(estimate.cov[alpha, 0] + sigma ** 2) <= 4 * estimate.stderr[alpha, 0]


@pytest.mark.slow
def test_reverse_direction_noise_is_correlated_too():
    sigma = 0.5
    params = ClockParams(beta0=1.0, beta1=1.01, d=0.5, sigma=sigma)
    estimate = empirical_noise_cov(params, plan(12), 3, 20_000, seed=8, component='y')
    assert _within_four_standard_errors(estimate, covariance_matrix(3, 12, sigma))


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [1, 3, 5, 6, 9, 11])
def test_fictitious_model_noise_is_uncorrelated(alpha):
    sigma = 0.5
    params = ClockParams(beta0=1.0, beta1=1.01, d=0.5, sigma=sigma)
    for component in ("x", "y"):
        estimate = empirical_noise_cov(params, plan(12), alpha, 50_000, seed=alpha, component=component,
                                       source=Source.GE2)
        assert _within_four_standard_errors(estimate, np.eye(12 - alpha) * 2 * sigma ** 2)


@pytest.fixture(scope="module")
def reference_sweep():
    config = small_config(range(1, 20), n_trials=20_000, seed=2016)
    return run_mse(config, workers=4)


@pytest.mark.slow
def test_ge1_attains_the_bound_on_the_valid_range(reference_sweep):
    for alpha in range(10, 20):
        row = reference_sweep.get(Mode.GE1, 20, alpha)
        assert row.correlation_free
        assert 0.85 <= row.mse / row.crb <= 1.2, alpha


@pytest.mark.slow
def test_ge2_attains_the_bound_for_every_gap(reference_sweep):
    for alpha in range(1, 20):
        row = reference_sweep.get(Mode.GE2, 20, alpha)
        assert 0.85 <= row.mse / row.crb <= 1.2, alpha


@pytest.mark.slow
def test_ge1_beats_the_bound_below_the_valid_range(reference_sweep):
    row = reference_sweep.get(Mode.GE1, 20, 5)
    assert not row.correlation_free
    assert row.mse + row.ci_half_width < row.crb


@pytest.mark.slow
def test_empirical_optimum_is_near_the_closed_form():
    config = small_config(range(15, 30), modes=(Mode.GE1,), n_trials=20_000, seed=77, n_rounds=30)
    alpha, _ = find_empirical_optimal_alpha(config, workers=4)
    assert abs(alpha - optimal_gap(30, 1.01, 0.1, 10.0, 10.0)) <= 2


@pytest.mark.slow
def test_more_rounds_lower_the_mse_at_a_fixed_gap():
    shorter = run_mse(small_config([12], modes=(Mode.GE1,), n_trials=20_000, seed=90), workers=2)
    longer = run_mse(small_config([12], modes=(Mode.GE1,), n_trials=20_000, seed=90, n_rounds=24), workers=2)
    short_row = shorter.get(Mode.GE1, 20, 12)
    long_row = longer.get(Mode.GE1, 24, 12)
    assert short_row.mse - short_row.ci_half_width > long_row.mse + long_row.ci_half_width


def test_report_lookup_of_missing_cell():
    with pytest.raises(KeyError):
        MseReport().get(Mode.GE1, 20, 5)
