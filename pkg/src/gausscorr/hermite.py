"""Probabilists' Hermite polynomials, Gaussian quadrature and Hermite projection.

Expectations under ``N(0, sigma**2)`` are computed on the standardised
variable ``t = x / sigma`` against rules whose weights sum to one. A function
``g`` is summarised by the coefficients ``a_n = E[g(Z) He_n(Z / sigma)]`` and
reconstructed as ``sum_n a_n He_n(x / sigma) / n!``.
"""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermitenorm, roots_legendre

from . import _core
from .errors import NonIntegrableError, PreconditionError
from .functions import as_function, label_of

DEFAULT_ORDER = 32
DEFAULT_NODES = 128
NONSMOOTH_NODES = 512

# Composite rules: Gauss-Legendre panels of this many nodes on [-L, L].
PANEL_NODES = 16
# Cramer's bound |He_n(t)| exp(-t**2/4) <= 1.09 sqrt(n!) makes the tail
# beyond 14 negligible (< 1e-21 relative) for every order.
PROJECTION_HALF_WIDTH = 14.0
MOMENT_HALF_WIDTH = 10.0

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def hermite_eval(n, x):
    """He_n(x) by the three-term recurrence ``He_{k+1} = x He_k - k He_{k-1}``.

    Works elementwise on arrays. Python scalars (int, Fraction, ...) are
    evaluated in their own arithmetic, so rational input gives exact output.
    """
    if n < 0:
        raise PreconditionError("Hermite order must be >= 0")
    if isinstance(x, numbers.Number) and not isinstance(x, (float, np.generic)):
        prev, cur = 1, x
        if n == 0:
            return x**0
        for k in range(1, n):
            prev, cur = cur, x * cur - k * prev
        return cur
    arr = np.asarray(x, dtype=float)
    prev = np.ones_like(arr)
    if n == 0:
        out = prev
    else:
        cur = arr.copy()
        for k in range(1, n):
            prev, cur = cur, arr * cur - k * prev
        out = cur
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights for expectations under the standard normal density.

    ``sum(weights * f(nodes))`` approximates ``E[f(X)]`` for ``X ~ N(0, 1)``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "gauss-hermite"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise PreconditionError("nodes and weights must be equal-length 1-D arrays")
        if not np.all(weights > 0):
            raise PreconditionError("quadrature weights must be strictly positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size

    def expect(self, f):
        """E[f(X)], X standard normal."""
        return float(np.dot(self.weights, f(self.nodes)))


@lru_cache(maxsize=64)
def gauss_hermite_rule(m):
    """m-point Gauss-Hermite rule, exact for polynomials of degree <= 2m - 1.

    Weights are normalised to sum to one. Beyond about 350 nodes the outer
    weights underflow; use :func:`composite_rule` there.
    """
    if m < 1:
        raise PreconditionError("node count must be >= 1")
    nodes, weights = roots_hermitenorm(int(m))
    weights = weights / _SQRT_2PI
    if np.any(weights <= 0):
        raise PreconditionError(
            f"{m}-point Gauss-Hermite weights underflow; use a composite rule"
        )
    # symmetrise to remove round-off asymmetry in the root finder
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return QuadratureRule(nodes, weights / weights.sum())


def _panel_edges(m, half_width, breakpoints=()):
    panels = max(int(math.ceil(m / PANEL_NODES)), 2)
    edges = np.linspace(-half_width, half_width, panels + 1)
    extra = [b for b in breakpoints if -half_width < b < half_width]
    return np.unique(np.concatenate([edges, extra]))


def _legendre(q):
    t, w = roots_legendre(q)
    return t, w


def panel_nodes(edges, q=PANEL_NODES):
    """Gauss-Legendre nodes/weights times the normal density on given panels.

    ``edges`` has shape ``(rows, k)`` (sorted per row); returns ``(nodes,
    weights)`` of shape ``(rows, (k - 1) * q)``. Zero-width panels get zero
    weight. This is the building block for composite rules whose breakpoints
    move from row to row.
    """
    t, w = _legendre(q)
    edges = np.atleast_2d(edges)
    lo, hi = edges[:, :-1], edges[:, 1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = mid[..., None] + half[..., None] * t
    weights = half[..., None] * w * np.exp(-0.5 * nodes * nodes) / _SQRT_2PI
    rows = edges.shape[0]
    return nodes.reshape(rows, -1), weights.reshape(rows, -1)


def composite_rule(m=NONSMOOTH_NODES, breakpoints=(), half_width=PROJECTION_HALF_WIDTH):
    """Composite Gauss-Legendre rule against the standard normal density.

    Uniform panels on ``[-half_width, half_width]``, additionally split at
    ``breakpoints`` (mirrored so the rule stays symmetric). Suited to
    functions with jumps or kinks, where Gauss-Hermite converges slowly.
    """
    bps = set()
    for b in breakpoints:
        bps.update((float(b), -float(b)))
    edges = _panel_edges(m, half_width, sorted(bps))
    nodes, weights = panel_nodes(edges[None, :])
    nodes, weights = nodes[0], weights[0]
    keep = weights > 0
    nodes, weights = nodes[keep], weights[keep]
    return QuadratureRule(nodes, weights / weights.sum(), kind="composite")


def rule_for(g, sigma=1.0, m=None, half_width=PROJECTION_HALF_WIDTH):
    """Default rule for expectations of ``g(sigma * X)``.

    Polynomials get Gauss-Hermite (exact); everything else gets a composite
    rule split at the function's breakpoints in standardised units.
    """
    if getattr(g, "is_polynomial", False):
        return gauss_hermite_rule(m or DEFAULT_NODES)
    bps = tuple(b / sigma for b in getattr(g, "breakpoints", ()))
    return composite_rule(m or NONSMOOTH_NODES, bps, half_width)


@dataclass(frozen=True, eq=False)
class HermiteSeries:
    """Truncated expansion ``g(x) = sum_n coeffs[n] He_n(x / sigma) / n!``."""

    sigma: float
    coeffs: np.ndarray

    def __post_init__(self):
        sigma = float(self.sigma)
        coeffs = np.array(self.coeffs, dtype=float).ravel()
        if not sigma > 0 or not math.isfinite(sigma):
            raise PreconditionError("sigma must be > 0")
        if coeffs.size == 0 or not np.all(np.isfinite(coeffs)):
            raise PreconditionError("coefficients must be a non-empty finite vector")
        coeffs.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def order(self):
        return self.coeffs.size - 1

    def __call__(self, x):
        return reconstruct(self, x)

    def __eq__(self, other):
        if not isinstance(other, HermiteSeries):
            return NotImplemented
        return self.sigma == other.sigma and np.array_equal(self.coeffs, other.coeffs)

    def orthonormal(self):
        """Coefficients in the orthonormal basis, ``a_n / sqrt(n!)``."""
        return self.coeffs / np.sqrt(_factorials(self.order))

    def energy(self):
        """``sum_n a_n**2 / n!``, i.e. E[g(Z)**2] of the truncated series."""
        c = self.orthonormal()
        return float(np.dot(c, c))

    def truncated(self, order):
        return HermiteSeries(self.sigma, self.coeffs[: order + 1])

    def to_dict(self):
        return {"sigma": self.sigma, "coeffs": [float(c) for c in self.coeffs]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["sigma"], d["coeffs"])

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _factorials(order):
    return np.array([math.factorial(n) for n in range(order + 1)], dtype=float)


def project(g, sigma=1.0, order=DEFAULT_ORDER, rule=None):
    """Hermite coefficients ``a_n = E[g(Z) He_n(Z / sigma)]``, Z ~ N(0, sigma**2).

    Parameters
    ----------
    g : FunctionSpec, str or callable
    sigma : float
        Standard deviation of the reference Gaussian.
    order : int
        Highest coefficient index N.
    rule : QuadratureRule, optional
        Defaults to :func:`rule_for` ``(g, sigma)``.

    Raises
    ------
    NonIntegrableError
        If a coefficient comes out non-finite.
    """
    g = as_function(g)
    if not sigma > 0:
        raise PreconditionError("sigma must be > 0")
    if order < 0:
        raise PreconditionError("order must be >= 0")
    if rule is None:
        rule = rule_for(g, sigma)
    deg = getattr(g, "degree", None)
    if rule.kind == "gauss-hermite" and deg is not None and deg + order > 2 * len(rule) - 1:
        raise PreconditionError(
            f"{len(rule)}-node rule cannot integrate degree {deg} against He_{order} exactly"
        )
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.asarray(g(sigma * rule.nodes), dtype=float) * rule.weights
        coeffs, _ = _core.hermite_moments(vals, rule.nodes, order)
    bad = np.flatnonzero(~np.isfinite(coeffs))
    if bad.size:
        raise NonIntegrableError(int(bad[0]), label_of(g))
    return HermiteSeries(sigma, coeffs)


def reconstruct(s, x):
    """Evaluate the truncated series at ``x`` (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    c = s.coeffs / _factorials(s.order)
    out = _core.hermite_series(c, (arr / s.sigma).ravel()).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out
