import dataclasses
import logging
import math
import time
from multiprocessing import get_context

import numpy as np
from scipy.stats import norm

from bounds import crb_skew
from clock_model import generate_timestamps, recover_delays
from config import Config
from diff_sequences import build_diffs, build_diffs_ge2, check_gap, is_correlation_free, valid_gap_range
from errors import ConfigurationError, DegenerateInputError, GapRangeError
from estimation import estimate_skew, estimate_skew_classic
from models import ExperimentConfig, Mode, MseReport, MseRow, NoiseCovEstimate, RngStream, Source

MODE_CODES = {Mode.GE1: 1, Mode.GE2: 2, Mode.CLASSIC: 3}
CI_LEVEL = 0.95


def encode_stream(mode, n_rounds, alpha, trial):
    """
    Substream index of one trial.

    The index depends only on the cell key and the trial number, never on the
    position of the cell in a sweep, so reports do not depend on ordering or
    on how cells are spread over worker processes.
    """
    return (((MODE_CODES[mode] << 16 | n_rounds) << 16 | alpha) << 32) | trial


def sweep_cells(config):
    """Sorted, de-duplicated (mode, N, alpha) keys of an experiment"""
    n_rounds = config.plan.n_rounds
    cells = set()
    for mode in config.modes:
        if mode is Mode.CLASSIC:
            cells.add((mode, n_rounds, n_rounds - 1))
            continue
        for alpha in config.alphas:
            cells.add((mode, n_rounds, check_gap(alpha, n_rounds)))
    return sorted(cells, key=lambda cell: (MODE_CODES[cell[0]], cell[2]))


def run_trial(config, mode, alpha, trial):
    """beta1_hat of one independent trial of a cell"""
    rng = RngStream(config.seed, encode_stream(mode, config.plan.n_rounds, alpha, trial))
    if mode is Mode.GE2:
        return estimate_skew(build_diffs_ge2(config.params, config.plan, alpha, rng)).beta1_hat

    ts = generate_timestamps(config.params, config.plan, rng)
    if mode is Mode.CLASSIC:
        return estimate_skew_classic(ts).beta1_hat
    return estimate_skew(build_diffs(ts, alpha)).beta1_hat


def run_cell(config, cell):
    mode, n_rounds, alpha = cell
    params, plan = config.params, config.plan
    started = time.perf_counter()

    estimates = np.empty(config.n_trials)
    n_failed = 0
    error = None
    for trial in range(config.n_trials):
        try:
            estimates[trial] = run_trial(config, mode, alpha, trial)
        except DegenerateInputError as e:
            n_failed += 1
            estimates[trial] = np.nan
            if error is None:
                error = f"trial {trial}: {str(e)}"
                logging.error(f"Cell {mode.value} N={n_rounds} alpha={alpha} failed: {error}")

    crb = crb_skew(n_rounds, alpha, params.beta1, params.sigma, plan.h_step, plan.g_step).crb_beta1
    correlation_free = is_correlation_free(alpha, n_rounds)

    if n_failed:
        # A failed cell is flagged, never averaged over its surviving trials
        mse = mean_beta1 = ci_half_width = math.nan
    else:
        squared_errors = (estimates - params.beta1) ** 2
        mse = float(np.mean(squared_errors))
        mean_beta1 = float(np.mean(estimates))
        ci_half_width = confidence_half_width(squared_errors)

    logging.debug(f"Cell {mode.value} N={n_rounds} alpha={alpha}: "
                  f"{config.n_trials} trials in {time.perf_counter() - started:.2f}s")
    return MseRow(
        mode=mode,
        n_rounds=n_rounds,
        alpha=alpha,
        n_trials=config.n_trials,
        mse=mse,
        mean_beta1=mean_beta1,
        ci_half_width=ci_half_width,
        correlation_free=correlation_free,
        crb=crb,
        n_failed=n_failed,
        error=error,
    )


def _cell_worker(job):
    config, cell = job
    return run_cell(config, cell)


def confidence_half_width(samples, level=CI_LEVEL):
    """Normal-approximation half-width of the confidence interval of a sample mean"""
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 2:
        return math.nan
    z = norm.ppf(0.5 + level / 2.0)
    return float(z * np.std(samples, ddof=1) / math.sqrt(len(samples)))


def run_mse(config, workers=1):
    """
    Monte-Carlo MSE of the skew estimate for every (mode, alpha) cell.

    Trial t of cell c draws from RngStream(seed, encode_stream(c, t)), so the
    report is identical for any cell order and any number of workers.
    """
    config.validate()
    cells = sweep_cells(config)
    workers = max(1, min(workers, len(cells)))
    logging.info(f"Running {len(cells)} cells x {config.n_trials} trials on {workers} worker process(es)")

    if workers == 1:
        rows = [run_cell(config, cell) for cell in cells]
    else:
        ctx = get_context("spawn")
        jobs = [(config, cell) for cell in cells]
        with ctx.Pool(processes=workers) as pool:
            rows = pool.map(_cell_worker, jobs, chunksize=1)

    report = MseReport(rows=rows)
    if report.failed_cells():
        logging.warning(f"{len(report.failed_cells())} cell(s) had degenerate trials")
    return report


def empirical_noise_cov(params, plan, alpha, n_trials, seed, component='x', source=Source.GE1):
    """
    Sample covariance of the difference noise X[alpha+j] - X[j] over independent runs.

    For GE1 runs the delays are recovered exactly from the generated timestamps;
    for GE2 runs the regenerated noise is read back from the difference sequences.
    Set component='y' for the child-to-parent direction.

    Returns:
        NoiseCovEstimate with the (N-alpha) x (N-alpha) covariance and the
        standard error of every entry
    """
    params.validate()
    plan.validate()
    alpha = check_gap(alpha, plan.n_rounds)
    if n_trials < Config.NOISE_COV_MIN_TRIALS:
        raise ConfigurationError(f"n_trials must be >= {Config.NOISE_COV_MIN_TRIALS}, got {n_trials}")
    if component not in ('x', 'y'):
        raise ConfigurationError(f"component must be 'x' or 'y', got {component!r}")

    samples = np.empty((n_trials, plan.n_rounds - alpha))
    for trial in range(n_trials):
        rng = RngStream(seed, trial)
        if Source(source) is Source.GE2:
            diffs = build_diffs_ge2(params, plan, alpha, rng)
            if component == 'x':
                samples[trial] = diffs.d2 / params.beta1 - diffs.d1
            else:
                samples[trial] = diffs.d4 - diffs.d3 / params.beta1
        else:
            x, y = recover_delays(generate_timestamps(params, plan, rng), params)
            delays = x if component == 'x' else y
            samples[trial] = delays[alpha:] - delays[:-alpha]

    centered = samples - samples.mean(axis=0)
    cov = centered.T @ centered / (n_trials - 1)
    stderr = np.empty_like(cov)
    for m in range(cov.shape[0]):
        products = centered[:, m:m + 1] * centered
        stderr[m] = products.std(axis=0, ddof=1) / math.sqrt(n_trials)
    return NoiseCovEstimate(alpha=alpha, n_trials=n_trials, cov=cov, stderr=stderr)


def find_empirical_optimal_alpha(config, workers=1):
    """
    Gap with the smallest GE1 MSE among the swept valid gaps (ties go to the smaller gap).

    Returns:
        Tuple of (alpha, mse)
    """
    if not config.alphas:
        raise GapRangeError("empty gap sweep", n_rounds=config.plan.n_rounds)
    valid = valid_gap_range(config.plan.n_rounds)
    outside = sorted(a for a in set(config.alphas) if a not in valid)
    if outside:
        raise GapRangeError(
            f"gaps {outside} are outside the valid range [{valid.start}, {valid.stop - 1}]",
            alpha=outside[0], n_rounds=config.plan.n_rounds,
        )

    report = run_mse(dataclasses.replace(config, modes=(Mode.GE1,)), workers=workers)
    usable = [row for row in report.rows if not row.n_failed]
    if not usable:
        raise DegenerateInputError("every swept gap had degenerate trials")
    best = min(usable, key=lambda row: (row.mse, row.alpha))
    return best.alpha, best.mse


def default_config(params, plan, alphas, modes=(Mode.GE1, Mode.GE2), n_trials=None, seed=None):
    """ExperimentConfig with the trial count and seed falling back to Config"""
    return ExperimentConfig(
        params=params,
        plan=plan,
        alphas=tuple(alphas),
        modes=tuple(modes),
        n_trials=Config.DEFAULT_TRIALS if n_trials is None else n_trials,
        seed=Config.DEFAULT_SEED if seed is None else seed,
    )
