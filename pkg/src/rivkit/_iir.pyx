# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled IIR difference-equation kernel (hot loop of all prefiltering)."""

import numpy as np

BACKEND = "cython"


def filt(const double[::1] b, const double[::1] a, const double[::1] x):
    """Run y[k] = (sum_j b[j] x[k-j] - sum_{j>=1} a[j] y[k-j]) / a[0].

    Zero initial conditions; ``a[0]`` must be nonzero.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t nb = b.shape[0]
    cdef Py_ssize_t na = a.shape[0]
    y_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] y = y_arr
    cdef double a0 = a[0]
    cdef double acc
    cdef Py_ssize_t k, j, jb, ja
    with nogil:
        for k in range(n):
            acc = 0.0
            jb = nb if nb < k + 1 else k + 1
            for j in range(jb):
                acc += b[j] * x[k - j]
            ja = na if na < k + 1 else k + 1
            for j in range(1, ja):
                acc -= a[j] * y[k - j]
            y[k] = acc / a0
    return y_arr
