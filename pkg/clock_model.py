import logging

import numpy as np

from models import TimestampSet


def sigma_from_snr_db(snr_db):
    """
    Convenience convention sigma = 10^(-SNR/20).

    This is a labelling convention for the command line, not a definition of
    SNR taken from the model.
    """
    return float(10.0 ** (-float(snr_db) / 20.0))


def schedule_grid(plan):
    """
    Parent-side send and receive times of a validated schedule.

    T1,i = origin + (i-1)H and T4,i = origin + offset + (i-1)G, so that
    D1,j = alpha*H and D4,j = alpha*G for every gap. With H = G this reduces
    to T4,i = T1,i + offset.
    """
    rounds = np.arange(plan.n_rounds, dtype=float)
    t1 = plan.t1_origin + rounds * plan.h_step
    t4 = (plan.t1_origin + plan.t4_offset) + rounds * plan.g_step
    return t1, t4


def draw_delays(rng, n_rounds, sigma):
    """Variable delays X (parent to child) and Y (child to parent), i.i.d. N(0, sigma^2)"""
    x = rng.standard_normal(n_rounds) * sigma
    y = rng.standard_normal(n_rounds) * sigma
    return x, y


def generate_timestamps(params, plan, rng):
    """
    Generate the timestamps of N two-way message exchanges.

    Args:
        params: ClockParams with the ground-truth offset, skew and delays
        plan: SchedulePlan fixing the parent-side send/receive grid
        rng: RngStream selecting the noise realization

    Returns:
        TimestampSet with T1..T4 and the number of rounds where T3 < T2
    """
    params.validate()
    plan.validate()

    t1, t4 = schedule_grid(plan)
    x, y = draw_delays(rng.generator(), plan.n_rounds, params.sigma)

    b0, b1, d = params.beta0, params.beta1, params.d
    t2 = b1 * t1 + b0 + b1 * (d + x)
    t3 = b1 * t4 + b0 - b1 * (d + y)

    # Unbounded Gaussian delays can reorder the child's timestamps; they are
    # reported but never rejected so the noise distribution stays intact.
    acausal_count = int(np.count_nonzero(t3 < t2))
    if acausal_count:
        logging.debug(f"{acausal_count} of {plan.n_rounds} rounds have T3 < T2 (stream {rng.stream_id})")

    return TimestampSet(t1=t1, t2=t2, t3=t3, t4=t4, acausal_count=acausal_count)


def recover_delays(ts, params):
    """
    Recover the exact delay realizations from simulated timestamps.

    Only meaningful inside the simulator, where (beta0, beta1, d) are known.
    """
    b0, b1, d = params.beta0, params.beta1, params.d
    x = (ts.t2 - b0) / b1 - ts.t1 - d
    y = ts.t4 - (ts.t3 - b0) / b1 - d
    return x, y
