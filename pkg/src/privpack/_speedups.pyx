# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled solver kernels.

Mirrors ``_kernels_py`` operation for operation; see that module's docstring
for the pinned arithmetic recipe that keeps the two backends bit-identical.
The extension is built with -ffp-contract=off so the compiler cannot fuse
the multiply-subtract sequences into FMAs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()

BACKEND_NAME = "compiled"

NORM_RTOL = 1e-9
FAIL_NONE = 0
FAIL_POSITIVITY = 1
FAIL_NORM = 2

cdef double _NORM_RTOL = 1e-9
cdef int _FAIL_NONE = 0
cdef int _FAIL_POSITIVITY = 1
cdef int _FAIL_NORM = 2


cdef inline void _tree_reduce_2d(double[:, ::1] buf, Py_ssize_t size, Py_ssize_t m) noexcept nogil:
    # Balanced pairwise reduction over rows 0..size-1 (size a power of two);
    # the result lands in row 0. Pairing (0,1), (2,3), ... at every level
    # matches the fallback's zero-padded halving.
    cdef Py_ssize_t length = size, half, i, j
    while length > 1:
        half = length // 2
        for i in range(half):
            for j in range(m):
                buf[i, j] = buf[2 * i, j] + buf[2 * i + 1, j]
        length = half


cdef inline double _tree_reduce_1d(double[::1] buf, Py_ssize_t size) noexcept nogil:
    cdef Py_ssize_t length = size, half, i
    while length > 1:
        half = length // 2
        for i in range(half):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        length = half
    return buf[0]


cdef inline int _update_prices(double[::1] prices, double* w, Py_ssize_t m, double p_max) noexcept nogil:
    # w holds the m reweighted coordinates and the dummy weight at index m.
    cdef Py_ssize_t j
    cdef double total = 0.0, phi, norm = 0.0
    for j in range(m + 1):
        total += w[j]
    phi = total / p_max
    for j in range(m + 1):
        prices[j] = w[j] / phi
    for j in range(m + 1):
        norm += prices[j]
    if fabs(norm - p_max) > _NORM_RTOL * p_max:
        return _FAIL_NORM
    return _FAIL_NONE


def best_responses(double[:, ::1] values, double[:, :, ::1] demands,
                   cnp.int64_t[::1] ell, double[::1] prices):
    """Best response of every agent to ``prices``; see the fallback twin."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t m = demands.shape[2]
    chosen_arr = np.empty(n, dtype=np.int64)
    util_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] chosen = chosen_arr
    cdef double[::1] util = util_arr
    cdef Py_ssize_t i, k, j, arg
    cdef double s, best
    with nogil:
        for i in range(n):
            arg = 0
            best = -INFINITY
            for k in range(ell[i]):
                s = values[i, k]
                for j in range(m):
                    s = s - demands[i, k, j] * prices[j]
                if s > best:
                    best = s
                    arg = k
            if best >= 0.0:
                chosen[i] = arg
                util[i] = best
            else:
                chosen[i] = -1
                util[i] = 0.0
    return chosen_arr, util_arr


def dmw_chunk(double[:, ::1] values, double[:, :, ::1] demands,
              cnp.int64_t[::1] ell, double b, double p_max, double eta,
              double grad_max, double[::1] prices, double[:, ::1] noise,
              cnp.int64_t[:, ::1] counts, double[::1] price_sum, trace=None):
    """Compiled twin of ``_kernels_py.dmw_chunk``."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t m = demands.shape[2]
    cdef Py_ssize_t rounds = noise.shape[0]
    cdef Py_ssize_t size = 1
    while size < n:
        size *= 2

    cons_arr = np.zeros((size, m), dtype=np.float64)
    util_arr = np.zeros(size, dtype=np.float64)
    w_arr = np.empty(m + 1, dtype=np.float64)
    cdef double[:, ::1] cons = cons_arr
    cdef double[::1] utilbuf = util_arr
    cdef double[::1] w = w_arr

    cdef bint do_trace = trace is not None
    cdef double[:, ::1] tr_prices, tr_gx, tr_gn, tr_gt
    cdef double[::1] tr_phi
    if do_trace:
        tr_prices = trace["prices"]
        tr_phi = trace["phi"]
        tr_gx = trace["grad_exact"]
        tr_gn = trace["grad_noisy"]
        tr_gt = trace["grad_trunc"]

    cdef Py_ssize_t t, i, j, k, arg
    cdef long clamps = 0
    cdef double max_lag = -INFINITY
    cdef double s, best, p_sum_real, util_sum, lag, gx, gn, gt, mult, total
    cdef int code

    for t in range(rounds):
        with nogil:
            for j in range(m + 1):
                price_sum[j] += prices[j]
            p_sum_real = 0.0
            for j in range(m):
                p_sum_real += prices[j]
            if do_trace:
                for j in range(m + 1):
                    tr_prices[t, j] = prices[j]

            for i in range(n):
                arg = 0
                best = -INFINITY
                for k in range(ell[i]):
                    s = values[i, k]
                    for j in range(m):
                        s = s - demands[i, k, j] * prices[j]
                    if s > best:
                        best = s
                        arg = k
                if best >= 0.0:
                    counts[i, arg] += 1
                    utilbuf[i] = best
                    for j in range(m):
                        cons[i, j] = demands[i, arg, j]
                else:
                    utilbuf[i] = 0.0
                    for j in range(m):
                        cons[i, j] = 0.0
            for i in range(n, size):
                utilbuf[i] = 0.0
                for j in range(m):
                    cons[i, j] = 0.0

            _tree_reduce_2d(cons, size, m)
            util_sum = _tree_reduce_1d(utilbuf, size)
            lag = b * p_sum_real + util_sum
            if lag > max_lag:
                max_lag = lag

            code = _FAIL_NONE
            for j in range(m):
                gx = b - cons[0, j]
                gn = gx + noise[t, j]
                if gn > grad_max:
                    gt = grad_max
                    clamps += 1
                elif gn < -grad_max:
                    gt = -grad_max
                    clamps += 1
                else:
                    gt = gn
                if do_trace:
                    tr_gx[t, j] = gx
                    tr_gn[t, j] = gn
                    tr_gt[t, j] = gt
                mult = 1.0 - eta * gt
                if mult <= 0.0:
                    code = _FAIL_POSITIVITY
                w[j] = prices[j] * mult
            w[m] = prices[m]
            if do_trace:
                total = 0.0
                for j in range(m + 1):
                    total += w[j]
                tr_phi[t] = total / p_max
            if code == _FAIL_NONE:
                code = _update_prices(prices, &w[0], m, p_max)
        if code != _FAIL_NONE:
            return clamps, max_lag, code, t
    return clamps, max_lag, _FAIL_NONE, -1


def domw_run(double[:, ::1] values, double[:, :, ::1] demands,
             cnp.int64_t[::1] ell, cnp.int64_t[::1] order, double b_over_n,
             double p_max, double eta, double grad_max, double[::1] prices,
             double[:, ::1] noise, cnp.int64_t[::1] chosen_out,
             double[::1] payment_out, double[::1] util_out,
             double[:, ::1] y_out, double[:, ::1] z_out,
             price_trace=None, bint dummy_reset=False):
    """Compiled twin of ``_kernels_py.domw_run``."""
    cdef Py_ssize_t rounds = order.shape[0]
    cdef Py_ssize_t m = demands.shape[2]
    w_arr = np.empty(m + 1, dtype=np.float64)
    cdef double[::1] w = w_arr

    cdef bint do_trace = price_trace is not None
    cdef double[:, ::1] tr_prices
    if do_trace:
        tr_prices = price_trace

    cdef Py_ssize_t t, i, j, k, arg
    cdef long clamps = 0
    cdef double s, best, pay, yj, zj, d, mult
    cdef bint took
    cdef int code = _FAIL_NONE

    for t in range(rounds):
        with nogil:
            i = order[t]
            if do_trace:
                for j in range(m + 1):
                    tr_prices[t, j] = prices[j]
            arg = 0
            best = -INFINITY
            for k in range(ell[i]):
                s = values[i, k]
                for j in range(m):
                    s = s - demands[i, k, j] * prices[j]
                if s > best:
                    best = s
                    arg = k
            took = best >= 0.0
            chosen_out[t] = arg if took else -1
            util_out[t] = best if took else 0.0
            pay = 0.0
            for j in range(m):
                yj = demands[i, arg, j] if took else 0.0
                y_out[t, j] = yj
                pay += prices[j] * yj
            payment_out[t] = pay

            code = _FAIL_NONE
            for j in range(m):
                zj = y_out[t, j] + noise[t, j]
                z_out[t, j] = zj
                d = zj - b_over_n
                if d > grad_max:
                    d = grad_max
                    clamps += 1
                elif d < -grad_max:
                    d = -grad_max
                    clamps += 1
                mult = 1.0 + eta * d
                if mult <= 0.0:
                    code = _FAIL_POSITIVITY
                w[j] = prices[j] * mult
            w[m] = 1.0 if dummy_reset else prices[m]
            if code == _FAIL_NONE:
                code = _update_prices(prices, &w[0], m, p_max)
        if code != _FAIL_NONE:
            return clamps, t + 1, code, t
    return clamps, rounds, _FAIL_NONE, -1
