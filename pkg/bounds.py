from errors import ConfigurationError
from diff_sequences import check_gap
from models import BoundPoint


def crb_skew(n_rounds, alpha, beta1, sigma, h_step, g_step):
    """
    Cramer-Rao bound on the MSE of the skew estimate under independent noise.

    Writing theta1 = 1/beta1, the difference model reads
        D1,j = theta1 * D2,j - W_j,    D4,j = theta1 * D3,j + V_j
    with W_j, V_j i.i.d. N(0, 2 sigma^2). Treating D2, D3 as regressors the
    Fisher information on theta1 is sum(D2^2 + D3^2) / (2 sigma^2). With the
    noiseless regressors D2,j = beta1*alpha*H and D3,j = beta1*alpha*G this gives

        var(theta1_hat) >= 2 sigma^2 / ((N - alpha) beta1^2 alpha^2 (H^2 + G^2))

    and the delta method, var(beta1_hat) ~ beta1^4 var(theta1_hat), yields

        crb_beta1 = 2 beta1^2 sigma^2 / ((N - alpha) alpha^2 (H^2 + G^2)).
    """
    alpha = check_gap(alpha, n_rounds)
    if sigma < 0:
        raise ConfigurationError(f"sigma must be >= 0, got {sigma}")
    if beta1 <= 0:
        raise ConfigurationError(f"beta1 must be > 0, got {beta1}")
    if h_step <= 0 or g_step <= 0:
        raise ConfigurationError(f"h_step and g_step must be > 0, got {h_step}, {g_step}")

    information = (n_rounds - alpha) * alpha ** 2 * (h_step ** 2 + g_step ** 2)
    crb = 2.0 * beta1 ** 2 * sigma ** 2 / information
    return BoundPoint(n_rounds=n_rounds, alpha=alpha, crb_beta1=crb)


def crb_curve(n_rounds, beta1, sigma, h_step, g_step, alphas):
    """Tabulate crb_skew over the given gaps, keeping their order"""
    return [crb_skew(n_rounds, alpha, beta1, sigma, h_step, g_step) for alpha in alphas]
