"""Symmetric bivariate normal pairs: Mehler density and cross-moments.

Two independent routes to ``E[g1(Z1) g2(Z2)]``:

* :func:`cross_moment` diagonalises the expectation through the Hermite
  coefficients of each function, ``sum_n a_n b_n rho**n / n!``.
* :func:`cross_moment_quadrature` integrates directly over two independent
  standard normals ``(U, V)`` with ``Z1 = sigma U`` and
  ``Z2 = sigma (rho U + sqrt(1 - rho**2) V)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _core
from .errors import PreconditionError
from .functions import as_function
from .hermite import (
    DEFAULT_NODES,
    MOMENT_HALF_WIDTH,
    gauss_hermite_rule,
    panel_nodes,
    _panel_edges,
)

# Early stop once the Cauchy-Schwarz bound on the remaining terms is below
# this fraction of the partial sum.
TAIL_RTOL = 1e-16


@dataclass(frozen=True)
class GaussianPairParams:
    """Zero-mean pair with common standard deviation ``sigma`` and correlation ``rho``."""

    sigma: float
    rho: float

    def __post_init__(self):
        sigma, rho = float(self.sigma), float(self.rho)
        if not (sigma > 0 and math.isfinite(sigma)):
            raise PreconditionError("sigma must be > 0")
        if not abs(rho) < 1:
            raise PreconditionError("rho must satisfy |rho| < 1")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "rho", rho)

    @property
    def covariance(self):
        return self.sigma**2 * self.rho


def density(z1, z2, p, mode="closed", order=40):
    """Joint density of the pair at ``(z1, z2)``.

    ``mode="closed"`` evaluates the bivariate normal formula; ``mode="series"``
    the Mehler expansion truncated after ``order`` terms.
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    s2, r = p.sigma**2, p.rho
    if mode == "closed":
        q = (z1 * z1 - 2 * r * z1 * z2 + z2 * z2) / (s2 * (1 - r * r))
        out = np.exp(-0.5 * q) / (2 * math.pi * s2 * math.sqrt(1 - r * r))
    elif mode == "series":
        if order < 0:
            raise PreconditionError("order must be >= 0")
        t1 = (z1 / p.sigma).ravel()
        t2 = (z2 / p.sigma).ravel()
        t1, t2 = np.broadcast_arrays(t1, t2)
        h1 = _core.hermite_table(t1, order)
        h2 = _core.hermite_table(t2, order)
        w = np.array([r**n / math.factorial(n) for n in range(order + 1)])
        kernel = np.einsum("n,nk,nk->k", w, h1, h2)
        base = np.exp(-0.5 * (t1 * t1 + t2 * t2)) / (2 * math.pi * s2)
        out = (base * kernel).reshape(np.broadcast(z1, z2).shape)
    else:
        raise PreconditionError(f"unknown density mode {mode!r}")
    return float(out) if np.ndim(out) == 0 else out


def _weighted(s1, s2, rho):
    n = min(s1.order, s2.order) + 1
    a = s1.orthonormal()[:n]
    b = s2.orthonormal()[:n]
    powers = np.abs(rho) ** (0.5 * np.arange(n))
    return a * powers, b * powers * np.sign(rho) ** np.arange(n)


def cross_moment(s1, s2, rho):
    """``E[g1(Z1) g2(Z2)] = sum_n a_n b_n rho**n / n!`` from two series.

    Summation stops once a Cauchy-Schwarz bound on the remaining terms drops
    below ``TAIL_RTOL`` times the partial sum. Negative and zero ``rho`` are
    accepted here; sign restrictions belong to the callers.
    """
    if s1.sigma != s2.sigma:
        raise PreconditionError(f"series scales differ: {s1.sigma} != {s2.sigma}")
    if not abs(rho) < 1:
        raise PreconditionError("rho must satisfy |rho| < 1")
    if rho == 0:
        return float(s1.coeffs[0] * s2.coeffs[0])
    x, y = _weighted(s1, s2, rho)
    terms = x * y
    # tail[k] bounds |sum_{n >= k} terms[n]| by Cauchy-Schwarz
    tx = np.cumsum((x * x)[::-1])[::-1]
    ty = np.cumsum((y * y)[::-1])[::-1]
    tail = np.sqrt(np.append(tx * ty, 0.0))
    total = 0.0
    for k, term in enumerate(terms):
        total += term
        if total != 0 and tail[k + 1] < TAIL_RTOL * abs(total):
            break
    return float(total)


def cross_moment_quadrature(g1, g2, p, m=DEFAULT_NODES):
    """``E[g1(Z1) g2(Z2)]`` by 2-D quadrature, independent of any Hermite series.

    Polynomial pairs use an ``m x m`` Gauss-Hermite tensor rule. Otherwise the
    outer variable gets a composite rule split at ``g1``'s breakpoints and,
    for each outer node, the inner variable a composite rule split where
    ``Z2`` crosses ``g2``'s breakpoints.
    """
    g1, g2 = as_function(g1), as_function(g2)
    if not isinstance(p, GaussianPairParams):
        p = GaussianPairParams(*p)
    if m < 1:
        raise PreconditionError("node count must be >= 1")
    sigma, rho = p.sigma, p.rho
    c = math.sqrt(1.0 - rho * rho)

    if getattr(g1, "is_polynomial", False) and getattr(g2, "is_polynomial", False):
        rule = gauss_hermite_rule(m)
        u, wu = rule.nodes, rule.weights
        v, wv = u, wu
        inner_args = sigma * (rho * u[:, None] + c * v[None, :])
        inner = np.asarray(g2(inner_args)) @ wv
        return float(np.dot(wu * np.asarray(g1(sigma * u)), inner))

    half = MOMENT_HALF_WIDTH
    bp1 = [b / sigma for b in getattr(g1, "breakpoints", ())]
    outer_edges = _panel_edges(m, half, bp1)
    u, wu = panel_nodes(outer_edges[None, :])
    u, wu = u[0], wu[0]

    base = _panel_edges(m, half)
    bp2 = np.asarray(getattr(g2, "breakpoints", ()), dtype=float)
    if bp2.size:
        # where sigma (rho u + c v) = b, per outer node
        moving = (bp2[None, :] / sigma - rho * u[:, None]) / c
        moving = np.clip(moving, -half, half)
        edges = np.sort(np.concatenate([np.broadcast_to(base, (u.size, base.size)), moving], axis=1), axis=1)
    else:
        edges = base[None, :]
    v, wv = panel_nodes(edges)
    inner = np.sum(wv * np.asarray(g2(sigma * (rho * u[:, None] + c * v))), axis=1)
    return float(np.dot(wu * np.asarray(g1(sigma * u)), inner))
