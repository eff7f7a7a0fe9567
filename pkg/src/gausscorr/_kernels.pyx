# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Hermite kernels. See ``_fallback.py`` for the reference versions."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def hermite_table(t, int order):
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t m = tv.shape[0], k
    cdef int n
    out = np.empty((order + 1, m))
    cdef double[:, ::1] o = out
    for k in range(m):
        o[0, k] = 1.0
        if order >= 1:
            o[1, k] = tv[k]
        for n in range(1, order):
            o[n + 1, k] = tv[k] * o[n, k] - n * o[n - 1, k]
    return out


def hermite_moments(y, t, int order):
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t m = tv.shape[0], k
    cdef int n
    s_arr = np.zeros(order + 1)
    ss_arr = np.zeros(order + 1)
    cdef double[::1] s = s_arr
    cdef double[::1] ss = ss_arr
    cdef double prev, cur, nxt, x, p
    if yv.shape[0] != m:
        raise ValueError("y and t must have the same length")
    for k in range(m):
        x = tv[k]
        prev = 1.0
        cur = x
        p = yv[k]
        s[0] += p
        ss[0] += p * p
        if order >= 1:
            p = yv[k] * cur
            s[1] += p
            ss[1] += p * p
        for n in range(2, order + 1):
            nxt = x * cur - (n - 1) * prev
            prev = cur
            cur = nxt
            p = yv[k] * cur
            s[n] += p
            ss[n] += p * p
    return s_arr, ss_arr


def hermite_series(c, t):
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t m = tv.shape[0], k
    cdef int n, order = cv.shape[0] - 1
    out = np.empty(m)
    cdef double[::1] o = out
    cdef double prev, cur, nxt, x, acc
    for k in range(m):
        x = tv[k]
        acc = cv[0]
        if order >= 1:
            prev = 1.0
            cur = x
            acc += cv[1] * cur
            for n in range(1, order):
                nxt = x * cur - n * prev
                prev = cur
                cur = nxt
                acc += cv[n + 1] * cur
        o[k] = acc
    return out


def lagrange_slack(a, b):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = av.shape[0], i, j
    cdef double acc = 0.0, d
    for i in range(n):
        for j in range(i + 1, n):
            d = av[i] * bv[j] - av[j] * bv[i]
            acc += d * d
    return acc
