# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled mixture-score kernel; mirrors kernels.reference.gmm_epsilon."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()


def gmm_epsilon(const double[::1] z, const double[::1] weights,
                const double[:, ::1] means, const double[::1] variances,
                double alpha_t):
    cdef Py_ssize_t d = z.shape[0]
    cdef Py_ssize_t k = weights.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(d, dtype=np.float64)

    cdef double one_minus = 1.0 - alpha_t
    if one_minus <= 0.0:
        return out

    cdef double[::1] out_v = out
    cdef double sqrt_a = sqrt(alpha_t)
    cdef double[::1] var_t = np.empty(k, dtype=np.float64)
    cdef double[::1] log_resp = np.empty(k, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double sq, dv, lmax, rsum, r, coef

    for i in range(k):
        var_t[i] = alpha_t * variances[i] + one_minus
        sq = 0.0
        for j in range(d):
            dv = sqrt_a * means[i, j] - z[j]
            sq += dv * dv
        log_resp[i] = log(weights[i]) - 0.5 * d * log(var_t[i]) - sq / (2.0 * var_t[i])

    lmax = log_resp[0]
    for i in range(1, k):
        if log_resp[i] > lmax:
            lmax = log_resp[i]
    rsum = 0.0
    for i in range(k):
        log_resp[i] = exp(log_resp[i] - lmax)
        rsum += log_resp[i]

    coef = -sqrt(one_minus)
    for i in range(k):
        r = log_resp[i] / rsum / var_t[i]
        for j in range(d):
            out_v[j] += r * (sqrt_a * means[i, j] - z[j])
    for j in range(d):
        out_v[j] *= coef
    return out
