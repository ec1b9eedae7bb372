"""Pure NumPy implementation of the mixture-score kernel."""

import numpy as np


def gmm_epsilon(z, weights, means, variances, alpha_t):
    """Exact noise estimate for an isotropic Gaussian mixture diffused to
    signal fraction ``alpha_t``.

    The diffused mixture has components N(sqrt(alpha_t) * mu_i,
    (alpha_t * var_i + 1 - alpha_t) * I); the estimate is
    ``-sqrt(1 - alpha_t)`` times the gradient of its log density, computed
    through log-sum-exp stabilized posterior responsibilities.
    """
    one_minus = 1.0 - alpha_t
    if one_minus <= 0.0:
        # Clean data carries full signal; the estimate is zero by convention.
        return np.zeros_like(z)

    d = z.shape[0]
    sqrt_a = np.sqrt(alpha_t)
    var_t = alpha_t * variances + one_minus          # (k,)
    diff = sqrt_a * means - z                        # (k, d)
    log_resp = (
        np.log(weights)
        - 0.5 * d * np.log(var_t)
        - np.einsum("kd,kd->k", diff, diff) / (2.0 * var_t)
    )
    log_resp -= log_resp.max()
    resp = np.exp(log_resp)
    resp /= resp.sum()

    score = (resp / var_t) @ diff                    # gradient of log density
    return -np.sqrt(one_minus) * score
