# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Sturm-count and bisection kernels for symmetric (cyclic) tridiagonal matrices."""
import numpy as np

from libc.math cimport fabs


cdef double PIVMIN = 1e-290
# Bunch's pivot threshold for symmetric tridiagonal blocks
cdef double ALPHA = 0.6180339887498949


cdef Py_ssize_t _count(const double[::1] d, const double[::1] e, double corner, double x) noexcept nogil:
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i, neg = 0
    cdef double q, f, fn, col, schur
    q = d[0] - x
    if corner == 0.0 or n < 3:
        if fabs(q) < PIVMIN:
            q = -PIVMIN
        if q < 0.0:
            neg += 1
        for i in range(1, n):
            q = d[i] - x - e[i - 1] * e[i - 1] / q
            if fabs(q) < PIVMIN:
                q = -PIVMIN
            if q < 0.0:
                neg += 1
        return neg
    # cyclic: block LDL^T of the leading (n-1) tridiagonal block, with 2x2 pivots
    # where a 1x1 pivot would be small (Bunch's criterion), plus the scalar Schur
    # complement of the last row.  The coupling column is carried along.
    cdef Py_ssize_t m = n - 1
    cdef double sigma = fabs(corner), p, g, det, ei, qn, fn2
    for i in range(n):
        if fabs(d[i] - x) > sigma:
            sigma = fabs(d[i] - x)
    for i in range(n - 1):
        if fabs(e[i]) > sigma:
            sigma = fabs(e[i])
    f = corner
    schur = d[n - 1] - x
    i = 0
    while i < m:
        ei = e[i] if i < m - 1 else 0.0
        if i < m - 1 and fabs(q) * sigma < ALPHA * ei * ei:
            # 2x2 pivot on rows i, i+1: det < 0, one negative and one positive eigenvalue
            p = d[i + 1] - x
            g = e[n - 2] if i + 1 == n - 2 else 0.0
            det = q * p - ei * ei
            neg += 1
            schur -= (p * f * f - 2.0 * ei * f * g + q * g * g) / det
            if i + 2 <= m - 1:
                col = e[n - 2] if i + 2 == n - 2 else 0.0
                qn = d[i + 2] - x - e[i + 1] * e[i + 1] * q / det
                fn2 = col - e[i + 1] * (q * g - ei * f) / det
                q = qn
                f = fn2
            i += 2
        else:
            if fabs(q) < PIVMIN:
                q = -PIVMIN
            if q < 0.0:
                neg += 1
            schur -= f * (f / q)
            if i + 1 <= m - 1:
                col = e[n - 2] if i + 1 == n - 2 else 0.0
                fn = col - ei * (f / q)
                q = d[i + 1] - x - ei * (ei / q)
                f = fn
            i += 1
    if fabs(schur) < PIVMIN:
        schur = -PIVMIN
    if schur < 0.0:
        neg += 1
    return neg


def sturm_count(double[::1] d, double[::1] e, double corner, double x):
    """Number of eigenvalues strictly below ``x``."""
    return _count(d, e, corner, x)


def lowest_eigenvalues(double[::1] d, double[::1] e, double corner, Py_ssize_t k,
                       double lo, double hi, double tol):
    """The ``k`` smallest eigenvalues by bisection on the Sturm count."""
    cdef Py_ssize_t j
    cdef double a, b, mid, left = lo
    out = np.empty(k, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for j in range(k):
            a = left
            b = hi
            while b - a > tol:
                mid = 0.5 * (a + b)
                if mid <= a or mid >= b:
                    break
                if _count(d, e, corner, mid) >= j + 1:
                    b = mid
                else:
                    a = mid
            res[j] = 0.5 * (a + b)
            left = a
    return out
