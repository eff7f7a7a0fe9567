"""Checks of the squared-correlation inequality for symmetric Gaussian pairs.

For ``rho > 0``::

    E[g1(Z1) g2(Z2)]**2 <= E[g1(Z1) g1(Z2)] * E[g2(Z1) g2(Z2)]

with equality exactly when ``g1`` and ``g2`` are proportional. Each check
returns a :class:`CorrelationReport`. Three engines compute the moments:

``series``
    Hermite projections and the diagonal Mehler sums. The slack is taken
    from Lagrange's identity on the rho-weighted coefficient vectors, so it
    is a sum of squares and is exactly the Cauchy-Schwarz gap at the
    truncation order.
``quadrature``
    The 2-D quadrature oracle of :mod:`gausscorr.mehler`.
``montecarlo``
    Seeded sample averages with delta-method standard errors.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _core
from .errors import ParityError, PreconditionError
from .functions import as_function, label_of
from .hermite import DEFAULT_ORDER, gauss_hermite_rule, project, rule_for
from .mehler import (
    DEFAULT_NODES,
    GaussianPairParams,
    _weighted,
    cross_moment,
    cross_moment_quadrature,
)

ENGINES = ("series", "quadrature", "montecarlo")
SERIES_TOL = 1e-10
QUADRATURE_TOL = 1e-8
MC_SE_MULT = 3.0
PROPORTIONAL_RTOL = 1e-8

PARITY_POINTS = 257
PARITY_HALF_WIDTH = 5.0
PARITY_RTOL = 1e-9


@dataclass(frozen=True)
class CorrelationReport:
    g1: str
    g2: str
    sigma: float
    rho: float
    engine: str
    lhs: float
    rhs: float
    slack: float
    equality: bool
    tolerance: float
    stderr: float = 0.0

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for k in ("sigma", "rho"):
            if d.get(k) is None:
                d[k] = float("nan")  # finite channels carry no sigma or rho
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _pair(p):
    return p if isinstance(p, GaussianPairParams) else GaussianPairParams(*p)


def parity_of(g, sigma=1.0):
    """Classify ``g`` as ``"even"``, ``"odd"`` or ``"neither"`` on a symmetric grid.

    The identically-zero function is reported as ``"even"`` (it is also odd).
    """
    g = as_function(g)
    x = np.linspace(0.0, PARITY_HALF_WIDTH * sigma, PARITY_POINTS // 2 + 1)
    pos = np.asarray(g(x), dtype=float)
    neg = np.asarray(g(-x), dtype=float)
    scale = max(np.max(np.abs(pos)), np.max(np.abs(neg)))
    if scale == 0:
        return "even"
    tol = PARITY_RTOL * scale
    if np.max(np.abs(pos - neg)) < tol:
        return "even"
    if np.max(np.abs(pos + neg)) < tol:
        return "odd"
    return "neither"


def proportional(g1, g2, p, order=DEFAULT_ORDER, rtol=PROPORTIONAL_RTOL):
    """Whether the rho-weighted coefficient vectors are proportional within ``rtol``.

    Tests ``||x - c y|| <= rtol * ||x||`` for the least-squares ``c`` (and
    symmetrically), where ``x_n = a_n rho**(n/2) / sqrt(n!)``.
    """
    p = _pair(p)
    x, y = _weighted(project(g1, p.sigma, order), project(g2, p.sigma, order), abs(p.rho))
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        return True
    c = np.dot(x, y) / np.dot(y, y)
    return bool(np.linalg.norm(x - c * y) <= rtol * nx)


def _report(g1, g2, p, engine, e12, e11, e22, tol, slack=None, stderr=0.0):
    lhs = e12 * e12
    rhs = e11 * e22
    if slack is None:
        slack = rhs - lhs
    if e11 == 0 or e22 == 0:
        # a null function is proportional to anything (c = 0)
        slack, equality = 0.0, True
    else:
        equality = abs(slack) <= tol
    return CorrelationReport(
        label_of(g1), label_of(g2), p.sigma, p.rho, engine,
        float(lhs), float(rhs), float(slack), bool(equality), float(tol), float(stderr),
    )


def _series_report(g1, g2, p, order):
    s1 = project(g1, p.sigma, order)
    s2 = project(g2, p.sigma, order)
    e12 = cross_moment(s1, s2, p.rho)
    e11 = cross_moment(s1, s1, p.rho)
    e22 = cross_moment(s2, s2, p.rho)
    x, y = _weighted(s1, s2, p.rho)
    slack = _core.lagrange_slack(x, y)
    return _report(g1, g2, p, "series", e12, e11, e22, SERIES_TOL, slack=slack)


def _quadrature_report(g1, g2, p, nodes):
    e12 = cross_moment_quadrature(g1, g2, p, nodes)
    e11 = cross_moment_quadrature(g1, g1, p, nodes)
    e22 = cross_moment_quadrature(g2, g2, p, nodes)
    return _report(g1, g2, p, "quadrature", e12, e11, e22, QUADRATURE_TOL)


def _montecarlo_report(g1, g2, p, samples, seed):
    from .simulate import sample_bivariate

    z1, z2 = sample_bivariate(p, samples, seed)
    a1, a2 = np.asarray(g1(z1)), np.asarray(g2(z2))
    b1, b2 = np.asarray(g1(z2)), np.asarray(g2(z1))
    cols = np.vstack([a1 * a2, a1 * b1, b2 * a2])
    e12, e11, e22 = cols.mean(axis=1)
    grad = np.array([-2 * e12, e22, e11])
    cov = np.cov(cols)
    se = math.sqrt(max(grad @ cov @ grad, 0.0) / samples)
    return _report(g1, g2, p, "montecarlo", e12, e11, e22, MC_SE_MULT * se, stderr=se)


def lemma1_check(g1, g2, p, engine="series", *, order=DEFAULT_ORDER, nodes=DEFAULT_NODES,
                 samples=100_000, seed=0):
    """Check the inequality for ``rho > 0`` with the chosen engine.

    Negative or zero correlation is rejected here; see :func:`corollary_check`.
    """
    g1, g2 = as_function(g1), as_function(g2)
    p = _pair(p)
    if not p.rho > 0:
        raise PreconditionError("rho must be > 0 for this check; use corollary_check for rho < 0")
    if engine == "series":
        return _series_report(g1, g2, p, order)
    if engine == "quadrature":
        return _quadrature_report(g1, g2, p, nodes)
    if engine == "montecarlo":
        return _montecarlo_report(g1, g2, p, samples, seed)
    raise PreconditionError(f"unknown engine {engine!r}; expected one of {ENGINES}")


def corollary_check(g1, g2, p, engine="series", **kwargs):
    """Same-parity extension to any ``rho != 0``.

    For ``rho < 0`` the pair ``(Z1, -Z2)`` has correlation ``-rho > 0``; the
    check runs on ``g1`` and the reflection ``x -> g2(-x)`` at ``|rho|``. The
    report keeps the caller's labels and signed ``rho``.
    """
    g1, g2 = as_function(g1), as_function(g2)
    p = _pair(p)
    if p.rho == 0:
        raise PreconditionError("rho must be nonzero")
    par1, par2 = parity_of(g1, p.sigma), parity_of(g2, p.sigma)
    for g, par in ((g1, par1), (g2, par2)):
        if par == "neither":
            raise ParityError(f"{label_of(g)} is neither even nor odd")
    if par1 != par2:
        raise ParityError(
            f"parity mismatch: {label_of(g1)} is {par1} but {label_of(g2)} is {par2}"
        )
    if p.rho > 0:
        return lemma1_check(g1, g2, p, engine, **kwargs)
    r = lemma1_check(g1, g2.reflected(), GaussianPairParams(p.sigma, -p.rho), engine, **kwargs)
    return CorrelationReport(
        label_of(g1), label_of(g2), p.sigma, p.rho, r.engine,
        r.lhs, r.rhs, r.slack, r.equality, r.tolerance, r.stderr,
    )


def second_moment(g, sigma=1.0):
    """E[g(Z)**2] for Z ~ N(0, sigma**2) by direct quadrature."""
    g = as_function(g)
    if getattr(g, "is_polynomial", False):
        rule = gauss_hermite_rule(max(DEFAULT_NODES, g.degree + 1))
    else:
        rule = rule_for(g, sigma)
    v = np.asarray(g(sigma * rule.nodes), dtype=float)
    return float(np.dot(rule.weights, v * v))


def maxcorr_bound(g1, g2, p):
    """``rho**2 * E[g1(Z)**2] * E[g2(Z)**2]`` for odd ``g1``, ``g2``.

    An upper bound on ``E[g1(Z1) g2(Z2)]**2`` from the maximal-correlation
    property of Gaussian pairs.
    """
    g1, g2 = as_function(g1), as_function(g2)
    p = _pair(p)
    if p.rho == 0:
        raise PreconditionError("rho must be nonzero")
    for g in (g1, g2):
        if parity_of(g, p.sigma) != "odd":
            raise ParityError(f"{label_of(g)} is not odd")
    return p.rho**2 * second_moment(g1, p.sigma) * second_moment(g2, p.sigma)
