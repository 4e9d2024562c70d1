# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels in ``_kernels_py``.

Same contracts, same deterministic pivots; tight C loops instead of
vectorized masking.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport (acos, acosh, asinh, cbrt, cos, cosh, fabs, log,
                        sinh, sqrt)

cnp.import_array()

NAME = "compiled"


def tridiag_solve(double mu3, double mu4, double[::1] rhs):
    """Thomas recurrence for (mu3*D^T D + mu4*I) s = rhs."""
    cdef Py_ssize_t k = rhs.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(k)
    cdef double[::1] x = out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scratch = np.empty(k)
    cdef double[::1] cp = scratch
    cdef double off = -mu3
    cdef double diag_edge = mu4 + mu3
    cdef double diag_inner = mu4 + 2.0 * mu3
    cdef double m, d
    cdef Py_ssize_t i

    if k == 1:
        out[0] = rhs[0] / mu4
        return out

    cp[0] = off / diag_edge
    x[0] = rhs[0] / diag_edge
    for i in range(1, k):
        d = diag_edge if i == k - 1 else diag_inner
        m = d - off * cp[i - 1]
        cp[i] = off / m
        x[i] = (rhs[i] - off * x[i - 1]) / m
    for i in range(k - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return out


def l1ball_project(double[::1] z, double alpha):
    """Projection onto the l1 ball via deterministic-pivot threshold search."""
    cdef Py_ssize_t k = z.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(k)
    cdef double[::1] res = out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] work = np.empty(k)
    cdef double[::1] cand = work
    cdef Py_ssize_t i, n, m
    cdef double total = 0.0
    cdef double pivot, block_sum, acc_sum, theta, val
    cdef Py_ssize_t block_cnt, acc_cnt

    for i in range(k):
        val = fabs(z[i])
        cand[i] = val
        total += val
    if total <= alpha:
        for i in range(k):
            res[i] = z[i]
        return out
    if alpha == 0.0:
        for i in range(k):
            res[i] = 0.0
        return out

    acc_sum = 0.0
    acc_cnt = 0
    n = k
    while n > 0:
        pivot = cand[n // 2]
        block_sum = 0.0
        block_cnt = 0
        for i in range(n):
            if cand[i] >= pivot:
                block_sum += cand[i]
                block_cnt += 1
        if acc_sum + block_sum - (acc_cnt + block_cnt) * pivot < alpha:
            acc_sum += block_sum
            acc_cnt += block_cnt
            m = 0
            for i in range(n):
                if cand[i] < pivot:
                    cand[m] = cand[i]
                    m += 1
            n = m
        else:
            m = 0
            for i in range(n):
                if cand[i] > pivot:
                    cand[m] = cand[i]
                    m += 1
            n = m
    theta = (acc_sum - alpha) / acc_cnt
    for i in range(k):
        val = fabs(z[i]) - theta
        if val < 0.0:
            val = 0.0
        res[i] = val if z[i] >= 0.0 else -val
    return out


cdef inline double _xi_slope(double t, double a, double b,
                             double lam, double mu4) nogil:
    return 0.5 * lam * (t - a) / (t * t) + mu4 * (t - b)


def xi_bisect(double[::1] a, double[::1] b, double lam, double mu4,
              double tol):
    """Per-element bisection for the xi-update; see the numpy twin."""
    cdef Py_ssize_t k = a.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(k)
    cdef double[::1] res = out
    cdef double lo, hi, mid
    cdef Py_ssize_t i, it

    for i in range(k):
        lo = a[i] if a[i] < b[i] else b[i]
        if lo < 1.0:
            lo = 1.0
        hi = a[i] if a[i] > b[i] else b[i]
        if _xi_slope(lo, a[i], b[i], lam, mu4) >= 0.0:
            hi = lo
        it = 0
        while hi - lo > tol and it < 200:
            mid = 0.5 * (lo + hi)
            if _xi_slope(mid, a[i], b[i], lam, mu4) > 0.0:
                hi = mid
            else:
                lo = mid
            it += 1
        res[i] = 0.5 * (lo + hi)
    return out


cdef inline double _cubic_positive_root(double p, double q) nogil:
    """Unique positive root of s^3 + p*s + q = 0 for q < 0."""
    cdef double s, m, arg, curv, resid
    if p > 0.0:
        arg = 1.5 * q / p * sqrt(3.0 / p)
        s = -2.0 * sqrt(p / 3.0) * sinh(asinh(arg) / 3.0)
    elif p == 0.0:
        s = cbrt(-q)
    else:
        m = sqrt(-p / 3.0)
        arg = 1.5 * q / p * sqrt(-3.0 / p)
        if 27.0 * q * q + 4.0 * p * p * p >= 0.0:
            if arg < 1.0:
                arg = 1.0
            s = 2.0 * m * cosh(acosh(arg) / 3.0)
        else:
            if arg > 1.0:
                arg = 1.0
            elif arg < -1.0:
                arg = -1.0
            s = 2.0 * m * cos(acos(arg) / 3.0)
    curv = 3.0 * s * s + p
    if fabs(curv) > 1e-8:
        resid = s * (s * s + p) + q
        s -= resid / curv
    return s


def perspective_prox(double[::1] omega, double[::1] v, double[::1] xi):
    """Joint prox of omega*phi at (v, xi); see the numpy twin."""
    cdef Py_ssize_t k = v.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vo = np.empty(k)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xo = np.empty(k)
    cdef double[::1] v_out = vo
    cdef double[::1] xi_out = xo
    cdef double om, vv, xx, s, av
    cdef Py_ssize_t i

    for i in range(k):
        om = omega[i]
        vv = v[i]
        xx = xi[i]
        if om <= 0.0:
            v_out[i] = vv
            xi_out[i] = xx if xx > 0.0 else 0.0
        elif 2.0 * om * xx + vv * vv <= om * om:
            v_out[i] = 0.0
            xi_out[i] = 0.0
        elif vv == 0.0:
            v_out[i] = 0.0
            xi_out[i] = xx - 0.5 * om
        else:
            av = fabs(vv)
            s = _cubic_positive_root(2.0 * xx / om + 1.0, -2.0 * av / om)
            v_out[i] = vv - s * om * (1.0 if vv > 0.0 else -1.0)
            xi_out[i] = xx + 0.5 * (s * s - 1.0) * om
    return vo, xo
