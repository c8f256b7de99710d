import math

import numpy as np

from errors import GapRangeError
from models import CorrelationReport, DiffSet, Source


def check_gap(alpha, n_rounds):
    """Raise GapRangeError unless 1 <= alpha <= N-1"""
    if isinstance(alpha, bool) or int(alpha) != alpha:
        raise GapRangeError(f"alpha must be an integer, got {alpha}", alpha=alpha, n_rounds=n_rounds)
    if not 1 <= alpha <= n_rounds - 1:
        raise GapRangeError(
            f"alpha={alpha} is outside [1, {n_rounds - 1}] for N={n_rounds}",
            alpha=alpha, n_rounds=n_rounds,
        )
    return int(alpha)


def build_diffs(ts, alpha):
    """D_r[j] = T_r[alpha+j] - T_r[j] for j = 1..N-alpha and r = 1..4"""
    alpha = check_gap(alpha, ts.n_rounds)
    d1, d2, d3, d4 = (t[alpha:] - t[:-alpha] for t in ts.arrays())
    return DiffSet(alpha=alpha, d1=d1, d2=d2, d3=d3, d4=d4, source=Source.GE1)


def build_diffs_ge2(params, plan, alpha, rng):
    """
    Difference sequences of the fictitious comparison model.

    The correlated noise terms X[alpha+j] - X[j] and Y[alpha+j] - Y[j] are
    replaced by fresh i.i.d. draws with variance 2*sigma^2. This matches no
    real two-way exchange and only serves as a reference that attains the bound.
    """
    params.validate()
    plan.validate()
    alpha = check_gap(alpha, plan.n_rounds)
    n_pairs = plan.n_rounds - alpha

    generator = rng.generator()
    scale = math.sqrt(2.0) * params.sigma
    w = generator.standard_normal(n_pairs) * scale
    v = generator.standard_normal(n_pairs) * scale

    b1 = params.beta1
    d1 = np.full(n_pairs, alpha * plan.h_step)
    d4 = np.full(n_pairs, alpha * plan.g_step)
    d2 = b1 * d1 + b1 * w
    d3 = b1 * d4 - b1 * v
    return DiffSet(alpha=alpha, d1=d1, d2=d2, d3=d3, d4=d4, source=Source.GE2)


def noise_cov(alpha, m, n, sigma):
    """E[(X[alpha+m] - X[m]) (X[alpha+n] - X[n])] for 1-based indices m, n"""
    if m < 1 or n < 1:
        raise GapRangeError(f"indices must be >= 1, got m={m}, n={n}", alpha=alpha)
    var = sigma * sigma
    if m == n:
        return 2.0 * var
    if abs(m - n) == alpha:
        return -var
    return 0.0


def covariance_matrix(alpha, n_rounds, sigma):
    """Covariance of the N-alpha difference-noise terms, assembled from noise_cov"""
    alpha = check_gap(alpha, n_rounds)
    size = n_rounds - alpha
    cov = np.empty((size, size))
    for m in range(1, size + 1):
        for n in range(1, size + 1):
            cov[m - 1, n - 1] = noise_cov(alpha, m, n, sigma)
    return cov


def correlated_pairs(n_rounds, alpha):
    """Exhaustive search for pairs (m, n), n < m <= N-alpha, with m - n = alpha"""
    alpha = check_gap(alpha, n_rounds)
    last = n_rounds - alpha
    pairs = tuple((m, n) for m in range(1, last + 1) for n in range(1, m) if m - n == alpha)
    return CorrelationReport(alpha=alpha, n_rounds=n_rounds, pairs=pairs)


def valid_gap_range(n_rounds, strict=True):
    """
    Gaps for which no two difference-noise terms are correlated.

    The exact condition is alpha > (N-1)/2, i.e. alpha >= ceil(N/2). The
    looser range starts at floor(N/2), which agrees for even N but admits
    the correlated pair (alpha+1, 1) for odd N; pass strict=False to get it.
    """
    if n_rounds < 2:
        raise GapRangeError(f"N must be >= 2, got {n_rounds}", n_rounds=n_rounds)
    lower = (n_rounds + 1) // 2 if strict else n_rounds // 2
    return range(max(lower, 1), n_rounds)


def is_correlation_free(alpha, n_rounds):
    return alpha in valid_gap_range(n_rounds)
