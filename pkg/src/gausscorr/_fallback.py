"""Pure numpy versions of the hot kernels.

Each function mirrors one in ``_kernels.pyx`` with the same signature.
Summation order differs (numpy sums pairwise), so the two backends agree
to round-off rather than bit for bit.
"""

import numpy as np


def hermite_table(t, order):
    """He_0..He_order at every point of ``t``, shape ``(order + 1, len(t))``."""
    t = np.ascontiguousarray(t, dtype=float)
    out = np.empty((order + 1, t.size))
    out[0] = 1.0
    if order >= 1:
        out[1] = t
    for n in range(1, order):
        out[n + 1] = t * out[n] - n * out[n - 1]
    return out


def hermite_moments(y, t, order):
    """Return ``(s, ss)`` with ``s[n] = sum_k y_k He_n(t_k)`` and ``ss[n] = sum_k (y_k He_n(t_k))**2``."""
    y = np.ascontiguousarray(y, dtype=float)
    t = np.ascontiguousarray(t, dtype=float)
    s = np.empty(order + 1)
    ss = np.empty(order + 1)
    prev = np.ones_like(t)
    cur = t.copy()
    for n in range(order + 1):
        if n == 0:
            h = prev
        elif n == 1:
            h = cur
        else:
            prev, cur = cur, t * cur - (n - 1) * prev
            h = cur
        p = y * h
        s[n] = p.sum()
        ss[n] = (p * p).sum()
    return s, ss


def hermite_series(c, t):
    """Evaluate ``sum_n c[n] He_n(t)`` at every point of ``t``."""
    c = np.ascontiguousarray(c, dtype=float)
    t = np.ascontiguousarray(t, dtype=float)
    acc = np.full_like(t, c[0])
    if c.size == 1:
        return acc
    prev = np.ones_like(t)
    cur = t.copy()
    acc += c[1] * cur
    for n in range(1, c.size - 1):
        prev, cur = cur, t * cur - n * prev
        acc += c[n + 1] * cur
    return acc


def lagrange_slack(a, b):
    """``sum(a**2) * sum(b**2) - sum(a*b)**2`` via Lagrange's identity.

    Computed as ``sum_{i<j} (a_i b_j - a_j b_i)**2``, a sum of nonnegative
    terms that vanishes to round-off when ``a`` and ``b`` are proportional.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = np.outer(a, b)
    cross = d - d.T
    return float(np.triu(cross * cross, 1).sum())
