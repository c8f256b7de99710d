import argparse
import logging

import pandas as pd

from bounds import crb_curve, crb_skew
from clock_model import generate_timestamps, sigma_from_snr_db
from config import Config
from diff_sequences import build_diffs, correlated_pairs, covariance_matrix, valid_gap_range
from errors import ClockSyncError, ConfigurationError
from estimation import estimate_skew, optimal_gap, optimal_gap_real
from experiments import run_mse
from models import ClockParams, ExperimentConfig, Mode, RngStream, SchedulePlan
import report_io


def parse_alphas(text):
    """Parse gap lists such as '1..19', '10,12,15' or '1..5,8'"""
    alphas = []
    for part in text.split(','):
        part = part.strip()
        if not part:
            continue
        try:
            numbers = [int(x) for x in part.split('..', 1)]
        except ValueError:
            raise ConfigurationError(f"cannot parse gap list '{text}'") from None
        if len(numbers) == 1:
            alphas.extend(numbers)
            continue
        start, stop = numbers
        if stop < start:
            raise ConfigurationError(f"empty gap range '{part}'")
        alphas.extend(range(start, stop + 1))
    if not alphas:
        raise ConfigurationError(f"gap list '{text}' is empty")
    return alphas


def parse_modes(text):
    return tuple(dict.fromkeys(Mode.parse(name) for name in text.split(',') if name.strip()))


def _add_noise_flags(parser):
    noise = parser.add_mutually_exclusive_group()
    noise.add_argument('--sigma', type=float, help=f"std-dev of the variable delay (default {Config.DEFAULT_SIGMA})")
    noise.add_argument('--snr-db', type=float,
                       help="convenience convention: sigma = 10^(-SNR/20); not a model definition")


def _add_model_flags(parser):
    parser.add_argument('--beta0', type=float, default=Config.DEFAULT_BETA0, help="clock offset")
    parser.add_argument('--beta1', type=float, default=Config.DEFAULT_BETA1, help="clock skew")
    parser.add_argument('--d', type=float, default=Config.DEFAULT_DELAY, help="fixed one-way delay")
    _add_noise_flags(parser)


def _add_schedule_flags(parser):
    parser.add_argument('--n', type=int, default=Config.DEFAULT_ROUNDS, help="number of message exchanges N")
    parser.add_argument('--h', type=float, default=Config.DEFAULT_H_STEP, help="per-round step H of T1")
    parser.add_argument('--g', type=float, default=Config.DEFAULT_G_STEP, help="per-round step G of T4")
    parser.add_argument('--t1-origin', type=float, default=Config.DEFAULT_T1_ORIGIN)
    parser.add_argument('--t4-offset', type=float, default=Config.DEFAULT_T4_OFFSET)


def _add_output_flags(parser):
    parser.add_argument('-o', '--output', default=None, help="output path (default: stdout)")
    parser.add_argument('--format', choices=Config.OUTPUT_FORMATS, default='csv')


def build_parser():
    parser = argparse.ArgumentParser(
        prog=Config.TOOL_NAME,
        description="Generalized maximum-likelihood clock-skew estimation for two-way message exchanges",
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {Config.VERSION}")
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('gen', help="generate a timestamp CSV")
    _add_model_flags(gen)
    _add_schedule_flags(gen)
    gen.add_argument('--seed', type=int, default=Config.DEFAULT_SEED)
    gen.add_argument('--stream', type=int, default=0, help="substream index")
    _add_output_flags(gen)
    gen.set_defaults(handler=cmd_gen)

    estimate = sub.add_parser('estimate', help="estimate the skew from a timestamp CSV")
    estimate.add_argument('--input', '-i', required=True, help="timestamp CSV written by gen")
    estimate.add_argument('--alpha', type=int, default=None, help="gap (default N-1, the classic estimator)")
    _add_output_flags(estimate)
    estimate.set_defaults(handler=cmd_estimate)

    sweep = sub.add_parser('sweep', help="Monte-Carlo MSE sweep over gaps")
    _add_model_flags(sweep)
    _add_schedule_flags(sweep)
    sweep.add_argument('--alphas', default=None, help="gaps, e.g. 1..19 or 10,12 (default 1..N-1)")
    sweep.add_argument('--modes', default='ge1,ge2', help="comma list of ge1, ge2, classic")
    sweep.add_argument('--trials', type=int, default=Config.DEFAULT_TRIALS)
    sweep.add_argument('--seed', type=int, default=Config.DEFAULT_SEED)
    sweep.add_argument('--threads', type=int, default=Config.DEFAULT_THREADS,
                       help="worker processes; output does not depend on it")
    _add_output_flags(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    bound = sub.add_parser('bound', help="tabulate the skew bound over gaps")
    bound.add_argument('--beta1', type=float, default=Config.DEFAULT_BETA1)
    _add_noise_flags(bound)
    bound.add_argument('--n', type=int, default=Config.DEFAULT_ROUNDS)
    bound.add_argument('--h', type=float, default=Config.DEFAULT_H_STEP)
    bound.add_argument('--g', type=float, default=Config.DEFAULT_G_STEP)
    bound.add_argument('--alphas', default=None, help="gaps (default 1..N-1)")
    _add_output_flags(bound)
    bound.set_defaults(handler=cmd_bound)

    alpha_opt = sub.add_parser('alpha-opt', help="optimal gap for the given parameters")
    alpha_opt.add_argument('--beta1', type=float, default=Config.DEFAULT_BETA1)
    _add_noise_flags(alpha_opt)
    alpha_opt.add_argument('--n', type=int, default=Config.DEFAULT_ROUNDS)
    alpha_opt.add_argument('--h', type=float, default=Config.DEFAULT_H_STEP)
    alpha_opt.add_argument('--g', type=float, default=Config.DEFAULT_G_STEP)
    _add_output_flags(alpha_opt)
    alpha_opt.set_defaults(handler=cmd_alpha_opt)

    cov = sub.add_parser('cov', help="difference-noise covariance matrix or correlated pairs")
    cov.add_argument('--n', type=int, default=Config.DEFAULT_ROUNDS)
    cov.add_argument('--alpha', type=int, required=True)
    _add_noise_flags(cov)
    cov.add_argument('--pairs', action='store_true', help="list correlated index pairs instead")
    _add_output_flags(cov)
    cov.set_defaults(handler=cmd_cov)

    return parser


def _sigma(args):
    if args.snr_db is not None:
        return sigma_from_snr_db(args.snr_db)
    return Config.DEFAULT_SIGMA if args.sigma is None else args.sigma


def _noise_fields(args):
    if args.snr_db is not None:
        return {'snr_db': args.snr_db, 'sigma': _sigma(args), 'sigma_convention': '10^(-snr_db/20)'}
    return {'sigma': _sigma(args)}


def _rounds(args):
    if args.n < 2:
        raise ConfigurationError(f"n_rounds must be >= 2, got {args.n}")
    return args.n


def _params(args):
    return ClockParams(beta0=args.beta0, beta1=args.beta1, d=args.d, sigma=_sigma(args)).validate()


def _plan(args):
    return SchedulePlan(n_rounds=args.n, h_step=args.h, g_step=args.g,
                        t1_origin=args.t1_origin, t4_offset=args.t4_offset).validate()


def _emit(args, frame, header, include_columns=True):
    if args.format == 'json':
        text = report_io.render_json(frame, header)
    else:
        text = report_io.render_csv(frame, header, include_columns=include_columns)
    report_io.write_output(text, args.output)


def cmd_gen(args):
    params, plan = _params(args), _plan(args)
    ts = generate_timestamps(params, plan, RngStream(args.seed, args.stream))
    if ts.acausal_count:
        logging.warning(f"{ts.acausal_count} of {ts.n_rounds} rounds have T3 < T2")
    header = report_io.header_line(
        'gen', beta0=params.beta0, beta1=params.beta1, d=params.d, **_noise_fields(args),
        n=plan.n_rounds, h=plan.h_step, g=plan.g_step, t1_origin=plan.t1_origin,
        t4_offset=plan.t4_offset, seed=args.seed, stream=args.stream, acausal_count=ts.acausal_count,
    )
    _emit(args, report_io.timestamps_frame(ts), header)
    return 0


def cmd_estimate(args):
    ts, source_header = report_io.read_timestamps(args.input)
    alpha = ts.n_rounds - 1 if args.alpha is None else args.alpha
    estimate = estimate_skew(build_diffs(ts, alpha))
    if not estimate.correlation_free:
        valid = valid_gap_range(ts.n_rounds)
        logging.warning(
            f"alpha={alpha} is outside the valid gap range [{valid.start}, {valid.stop - 1}] "
            f"for N={ts.n_rounds}: difference noise is correlated and the estimator's "
            f"independence assumption does not hold"
        )
    header = report_io.header_line(
        'estimate', input=args.input, n=ts.n_rounds, alpha=alpha,
        seed=source_header.get('seed'), source_beta1=source_header.get('beta1'),
    )
    _emit(args, report_io.estimate_frame([estimate]), header)
    return 0


def cmd_sweep(args):
    params, plan = _params(args), _plan(args)
    alphas = parse_alphas(args.alphas) if args.alphas else list(range(1, plan.n_rounds))
    config = ExperimentConfig(params=params, plan=plan, alphas=tuple(alphas),
                              modes=parse_modes(args.modes), n_trials=args.trials, seed=args.seed)
    report = run_mse(config, workers=max(1, args.threads))
    for row in report.failed_cells():
        logging.error(f"cell {row.mode.value} N={row.n_rounds} alpha={row.alpha}: "
                      f"{row.n_failed} degenerate trial(s), first: {row.error}")
    # the worker count is left out of the header so outputs match across worker counts
    header = report_io.header_line(
        'sweep', beta0=params.beta0, beta1=params.beta1, d=params.d, **_noise_fields(args),
        n=plan.n_rounds, h=plan.h_step, g=plan.g_step, t1_origin=plan.t1_origin,
        t4_offset=plan.t4_offset, alphas=args.alphas or f"1..{plan.n_rounds - 1}",
        modes=','.join(m.value.lower() for m in config.modes), trials=config.n_trials, seed=config.seed,
    )
    _emit(args, report_io.mse_report_frame(report), header)
    return 0


def cmd_bound(args):
    sigma = _sigma(args)
    _rounds(args)
    alphas = parse_alphas(args.alphas) if args.alphas else list(range(1, args.n))
    points = crb_curve(args.n, args.beta1, sigma, args.h, args.g, alphas)
    header = report_io.header_line('bound', beta1=args.beta1, **_noise_fields(args), n=args.n,
                                   h=args.h, g=args.g, alphas=args.alphas or f"1..{args.n - 1}")
    _emit(args, report_io.bound_frame(points), header)
    return 0


def cmd_alpha_opt(args):
    sigma = _sigma(args)
    _rounds(args)
    alpha_real = optimal_gap_real(args.n, args.beta1, sigma, args.h, args.g)
    alpha = optimal_gap(args.n, args.beta1, sigma, args.h, args.g)
    crb = crb_skew(args.n, alpha, args.beta1, sigma, args.h, args.g).crb_beta1
    header = report_io.header_line('alpha-opt', beta1=args.beta1, **_noise_fields(args), n=args.n,
                                   h=args.h, g=args.g)
    frame = pd.DataFrame([{'alpha_real': alpha_real, 'alpha': alpha, 'crb_beta1': crb}])
    _emit(args, frame, header)
    return 0


def cmd_cov(args):
    sigma = _sigma(args)
    _rounds(args)
    header = report_io.header_line('cov', n=args.n, alpha=args.alpha, **_noise_fields(args),
                                   pairs=args.pairs)
    if args.pairs:
        _emit(args, report_io.pairs_frame(correlated_pairs(args.n, args.alpha)), header)
    else:
        frame = report_io.covariance_frame(covariance_matrix(args.alpha, args.n, sigma))
        _emit(args, frame, header, include_columns=False)
    return 0


def main(argv=None):
    logging.basicConfig(level=Config.LOG_LEVEL, format='%(levelname)s: %(message)s')
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        return args.handler(args)
    except ClockSyncError as e:
        logging.error(f"{args.command} failed: {str(e)}")
        return e.exit_code
    except OSError as e:
        logging.error(f"{args.command} failed: {str(e)}")
        return 1
