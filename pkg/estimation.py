import logging
import math

import numpy as np

from bounds import crb_skew
from diff_sequences import build_diffs, is_correlation_free, valid_gap_range
from errors import DegenerateInputError, DomainError, GapRangeError
from models import SkewEstimate

DEGENERATE_RATIO = 1e-30


def estimate_skew(diffs):
    """
    Skew estimate from gap-alpha difference sequences.

        beta1_hat = sum(D2^2 + D3^2) / sum(D1*D2 + D4*D3)

    Estimates at gaps below the valid range are still computed; they are
    flagged with correlation_free=False.
    """
    if diffs.n_pairs == 0:
        raise GapRangeError(f"empty difference arrays at alpha={diffs.alpha}", alpha=diffs.alpha)

    num = float(np.sum(diffs.d2 * diffs.d2 + diffs.d3 * diffs.d3))
    den = float(np.sum(diffs.d1 * diffs.d2 + diffs.d4 * diffs.d3))
    if den == 0.0 or abs(den) < DEGENERATE_RATIO * abs(num) or not math.isfinite(num / den):
        raise DegenerateInputError(
            f"degenerate estimator input at alpha={diffs.alpha}: "
            f"sum(D1*D2 + D4*D3)={den!r}, sum(D2^2 + D3^2)={num!r}"
        )

    beta1_hat = num / den
    n_rounds = diffs.n_pairs + diffs.alpha
    return SkewEstimate(
        beta1_hat=beta1_hat,
        theta1_hat=den / num,
        alpha=diffs.alpha,
        n_pairs=diffs.n_pairs,
        correlation_free=is_correlation_free(diffs.alpha, n_rounds),
    )


def estimate_skew_classic(ts):
    """First/last-round estimator: the generalized one at alpha = N-1"""
    return estimate_skew(build_diffs(ts, ts.n_rounds - 1))


def optimal_gap_real(n_rounds, beta1, sigma, h_step, g_step):
    """Real-valued optimal gap N/3 + sqrt(N^2/9 - 2 beta1^2 sigma^2 / (beta1^2 H^2 + G^2))"""
    scale = beta1 ** 2 * h_step ** 2 + g_step ** 2
    if scale <= 0:
        raise DomainError(f"beta1^2 H^2 + G^2 must be > 0, got {scale}", sigma=sigma)

    discriminant = n_rounds ** 2 / 9.0 - 2.0 * beta1 ** 2 * sigma ** 2 / scale
    if discriminant < 0:
        raise DomainError(
            f"sigma={sigma} too large for N={n_rounds}: need N^2/9 >= "
            f"2 beta1^2 sigma^2 / (beta1^2 H^2 + G^2), got discriminant {discriminant:.6g}",
            sigma=sigma,
        )
    return n_rounds / 3.0 + math.sqrt(discriminant)


def optimal_gap(n_rounds, beta1, sigma, h_step, g_step):
    """
    Integer optimal gap.

    The real optimum is clamped to the valid range, then its floor and ceiling
    are compared under the bound; the smaller bound wins and ties go to the
    smaller gap. The bound scales with sigma^2, so at sigma = 0 the comparison
    is made at unit sigma to keep the shape of the objective.
    """
    alpha_real = optimal_gap_real(n_rounds, beta1, sigma, h_step, g_step)
    valid = valid_gap_range(n_rounds)
    lower, upper = valid.start, valid.stop - 1

    def clamp(a):
        return min(max(a, lower), upper)

    candidates = sorted({clamp(math.floor(alpha_real)), clamp(math.ceil(alpha_real))})
    reference_sigma = sigma if sigma > 0 else 1.0
    best = min(
        candidates,
        key=lambda a: (crb_skew(n_rounds, a, beta1, reference_sigma, h_step, g_step).crb_beta1, a),
    )
    logging.debug(f"optimal gap for N={n_rounds}: real {alpha_real:.6f}, candidates {candidates}, chose {best}")
    return best
