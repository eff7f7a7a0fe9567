"""Identification of a memoryless nonlinearity observed through ``y = f(x + w)``.

Two scores, both estimated by time averages over a :class:`ChainDataset`:

``K1`` (invertible ``f``)
    ``E[h(z) x]**2 / (E[h(z)**2] E[x**2])`` with ``h = g o f`` applied as
    ``g(y)``; it peaks when ``g`` inverts ``f`` up to scale.
``K2`` (any ``f``, known SNR)
    ``E[f(z) g(alpha x)]**2 / E[g(z) g(alpha x)]``; the pair ``(z, alpha x)``
    is Gaussian with common variance and correlation ``1 / alpha``, so by the
    squared-correlation inequality K2 peaks only at ``g = c f``. The
    denominator is estimated with synthetic noise ``w'`` in place of ``w``.

The forward identifier maximises the truncated K2 in closed form: with
Hermite coefficients of ``g`` as unknowns, K2 is a Rayleigh quotient whose
maximiser is proportional to the coefficient vector of ``f``, estimated via
``E[y He_n(alpha x / sigma_z)] = a_n rho**n``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _core
from .errors import DegeneracyError, PreconditionError
from .functions import as_function
from .hermite import HermiteSeries, hermite_eval, reconstruct
from .mehler import GaussianPairParams, cross_moment_quadrature
from .simulate import synth_noise

ORDER_RHO_FLOOR = 1e-3
SIGNAL_SE_MULT = 10.0
UNSTABLE_SE_MULT = 10.0
MAX_CONDITION = 1e10
RIDGE = 1e-10


class Score(NamedTuple):
    value: float
    stderr: float


@dataclass(eq=False)
class IdentResult:
    """Outcome of an identification run.

    For ``basis="hermite"`` calling the result evaluates ``sum_n coeffs[n]
    He_n(x / sigma) / n!``, normalised so that ``sum coeffs**2 / n! = 1``
    with the largest ``|coeffs[n]| / sqrt(n!)`` positive; ``scale_c`` times
    it estimates ``f`` in the K2 sense. For
    ``basis="monomial"`` it is ``sum_k coeffs[k-1] (y / sigma)**k - offset``,
    normalised to unit sample variance.
    """

    coeffs: np.ndarray
    sigma: float
    scale_c: float
    score: float
    stderr: np.ndarray
    order: int
    basis: str = "hermite"
    offset: float = 0.0
    score_stderr: float = 0.0
    diagnostics: list = field(default_factory=list)
    fitted: np.ndarray | None = field(default=None, repr=False)

    @property
    def estimated_series(self):
        if self.basis != "hermite":
            raise PreconditionError("monomial results carry no Hermite series")
        return HermiteSeries(self.sigma, self.coeffs)

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        if self.basis == "hermite":
            return reconstruct(self.estimated_series, v)
        t = v / self.sigma
        return np.polynomial.polynomial.polyval(t, np.concatenate([[0.0], self.coeffs])) - self.offset

    def to_dict(self):
        return {
            "coeffs": [float(c) for c in self.coeffs],
            "sigma": float(self.sigma),
            "scale_c": float(self.scale_c),
            "score": float(self.score),
            "stderr": [float(s) for s in self.stderr],
            "order": int(self.order),
            "basis": self.basis,
            "offset": float(self.offset),
            "score_stderr": float(self.score_stderr),
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["coeffs"], dtype=float), d["sigma"], d["scale_c"], d["score"],
                   np.asarray(d["stderr"], dtype=float), int(d["order"]),
                   d.get("basis", "hermite"), d.get("offset", 0.0),
                   d.get("score_stderr", 0.0), list(d.get("diagnostics", [])))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def alpha_from_snr(sigma_x2, sigma_w2):
    """Gain making ``alpha * x`` as wide as ``z = x + w``: ``sqrt((sx2 + sw2) / sx2)``."""
    if not sigma_x2 > 0:
        raise PreconditionError("signal variance must be > 0")
    if sigma_w2 < 0:
        raise PreconditionError("noise variance must be >= 0")
    if sigma_w2 == 0:
        warnings.warn("zero noise variance: alpha = 1 and the pair is degenerate", stacklevel=2)
    return math.sqrt((sigma_x2 + sigma_w2) / sigma_x2)


def _delta_se(samples, grad):
    # SE of a smooth function of sample means, by the delta method
    cov = np.atleast_2d(np.cov(samples))
    var = float(grad @ cov @ grad)
    return math.sqrt(max(var, 0.0) / samples.shape[1])


def k1_score(ds, g):
    """Plug-in ``K1`` for ``h = g(y)``, centred, with a delta-method standard error."""
    g = as_function(g)
    h = np.asarray(g(ds.y), dtype=float)
    h = h - h.mean()
    return _k1_from_h(ds.x, h)


def _k1_from_h(x, h):
    a_s, b_s, c_s = h * x, h * h, x * x
    a, b, c = a_s.mean(), b_s.mean(), c_s.mean()
    if not b > 1e-24 * max(1.0, float(np.max(np.abs(h))) ** 2):
        raise DegeneracyError("g(y) has zero variance; K1 is undefined")
    k = a * a / (b * c)
    grad = np.array([2 * a / (b * c), -k / b, -k / c])
    return Score(float(k), _delta_se(np.vstack([a_s, b_s, c_s]), grad))


def k2_score(ds, w_prime, g, alpha=None):
    """Plug-in ``K2`` using ``y`` for ``f(z)`` and ``g(x + w')`` for ``g(z)``.

    ``K2 = E[y g(alpha x)]**2 / E[g(x + w') g(alpha x)]`` is unchanged when
    ``g`` is multiplied by a nonzero constant and carries the units of
    ``y**2``. Raises :class:`DegeneracyError` when the denominator is within 10
    standard errors of zero.
    """
    g = as_function(g)
    alpha = ds.config.alpha if alpha is None else alpha
    w_prime = np.asarray(w_prime, dtype=float)
    if w_prime.shape != ds.x.shape:
        raise PreconditionError("synthetic noise column has the wrong length")
    u = np.asarray(g(alpha * ds.x), dtype=float)
    num_s = ds.y * u
    den_s = np.asarray(g(ds.x + w_prime), dtype=float) * u
    num, den = num_s.mean(), den_s.mean()
    den_se = den_s.std(ddof=1) / math.sqrt(den_s.size)
    if not abs(den) >= UNSTABLE_SE_MULT * den_se or den == 0:
        raise DegeneracyError(
            f"K2 denominator {den:.3e} is within {UNSTABLE_SE_MULT:g} standard errors of zero"
        )
    k = num * num / den
    grad = np.array([2 * num / den, -k / den])
    return Score(float(k), _delta_se(np.vstack([num_s, den_s]), grad))


def k2_difference(ds, w_prime, g_ref, g_other, alpha=None):
    """``K2(g_ref) - K2(g_other)`` with a joint delta-method standard error.

    Both scores share ``x``, ``y`` and ``w'``, so their errors are strongly
    correlated; the joint SE accounts for that.
    """
    g_ref, g_other = as_function(g_ref), as_function(g_other)
    alpha = ds.config.alpha if alpha is None else alpha
    cols, grads = [], []
    for g in (g_ref, g_other):
        u = np.asarray(g(alpha * ds.x), dtype=float)
        num_s = ds.y * u
        den_s = np.asarray(g(ds.x + w_prime), dtype=float) * u
        num, den = num_s.mean(), den_s.mean()
        if den == 0:
            raise DegeneracyError("K2 denominator is zero")
        k = num * num / den
        cols += [num_s, den_s]
        grads.append((k, np.array([2 * num / den, -k / den])))
    (k_ref, g1), (k_oth, g2) = grads
    grad = np.concatenate([g1, -g2])
    return Score(float(k_ref - k_oth), _delta_se(np.vstack(cols), grad))


def _factorials(n):
    return np.array([math.factorial(k) for k in range(n + 1)], dtype=float)


def default_order(alpha):
    """Largest n with ``(1 / alpha)**n >= 1e-3``."""
    rho = 1.0 / alpha
    if rho >= 1:
        raise PreconditionError("alpha must exceed 1 (nonzero noise) for forward identification")
    return int(math.floor(math.log(ORDER_RHO_FLOOR) / math.log(rho)))


def _hermite_stats(ds, order, sigma_z, alpha):
    t = alpha * ds.x / sigma_z
    n = ds.x.size
    s, ss = _core.hermite_moments(ds.y, t, order)
    mean = s / n
    se = np.sqrt(np.maximum(ss / n - mean * mean, 0.0) / (n - 1))
    return mean, se


def _signal_ok(mean, se, rho, order):
    # Expected size of the order-N raw moment if f's energy were spread
    # evenly, versus 10 standard errors of its estimate.
    fact = _factorials(order)
    c = mean / rho ** np.arange(order + 1) / np.sqrt(fact)
    typical = math.sqrt(float(np.mean(c * c)))
    return rho**order * math.sqrt(fact[order]) * typical >= SIGNAL_SE_MULT * se[order]


def identify_forward(ds, order=None, alpha=None):
    """Estimate the normalised Hermite series of ``f`` from ``(x, y)``.

    ``order=None`` picks the largest order not exceeding
    :func:`default_order` whose top coefficient is above the noise floor. An
    explicit order that fails the noise-floor test raises
    :class:`DegeneracyError`.
    """
    cfg = ds.config
    alpha = cfg.alpha if alpha is None else float(alpha)
    sigma_z = cfg.sigma_z
    rho = 1.0 / alpha
    diagnostics = []
    if order is None:
        top = default_order(alpha)
        mean, se = _hermite_stats(ds, top, sigma_z, alpha)
        order = top
        while order > 1 and not _signal_ok(mean[: order + 1], se[: order + 1], rho, order):
            order -= 1
        mean, se = mean[: order + 1], se[: order + 1]
        diagnostics.append(f"order {order} selected (rho-floor limit {top})")
    else:
        if order < 0:
            raise PreconditionError("order must be >= 0")
        mean, se = _hermite_stats(ds, order, sigma_z, alpha)
        if order > 0 and not _signal_ok(mean, se, rho, order):
            raise DegeneracyError(
                f"order {order} is below the noise floor at {ds.x.size} samples "
                f"(estimator divides by rho**{order} = {rho**order:.3g}); use a smaller order"
            )
    return _forward_result(mean / rho ** np.arange(order + 1), se / rho ** np.arange(order + 1),
                           sigma_z, rho, order, diagnostics)


def _forward_result(a, se, sigma_z, rho, order, diagnostics):
    fact = _factorials(order)
    norm = math.sqrt(float(np.sum(a * a / fact)))
    if norm == 0:
        raise DegeneracyError("estimated coefficients are all zero")
    # sign convention: the dominant orthonormal coefficient is positive, so
    # the estimate of c * f does not depend on the sign of c
    k = int(np.argmax(np.abs(a) / np.sqrt(fact)))
    norm = math.copysign(norm, a[k])
    score = float(np.sum(a * a * rho ** np.arange(order + 1) / fact))
    return IdentResult(a / norm, sigma_z, norm, score, se / abs(norm), order,
                       diagnostics=list(diagnostics))


class _ScaledHermite:
    # He_n(x / sigma) as a polynomial callable for the quadrature oracle
    is_polynomial = True
    breakpoints = ()

    def __init__(self, n, sigma):
        self.n, self.sigma, self.degree = n, sigma, n
        self.label = f"He_{n}(x/{sigma:g})"

    def __call__(self, x):
        return hermite_eval(self.n, np.asarray(x, dtype=float) / self.sigma)


def identify_forward_oracle(f, sigma_x2, sigma_w2, order, nodes=128):
    """Forward identification with exact expectations in place of time averages.

    Each ``E[f(z) He_n(alpha x / sigma_z)]`` is computed by 2-D quadrature.
    """
    f = as_function(f)
    alpha = alpha_from_snr(sigma_x2, sigma_w2)
    sigma_z = math.sqrt(sigma_x2 + sigma_w2)
    rho = 1.0 / alpha
    p = GaussianPairParams(sigma_z, rho)
    mean = np.array([cross_moment_quadrature(f, _ScaledHermite(n, sigma_z), p, nodes)
                     for n in range(order + 1)])
    a = mean / rho ** np.arange(order + 1)
    return _forward_result(a, np.zeros(order + 1), sigma_z, rho, order, ["oracle mode"])


def identify_inverse(ds, degree):
    """Maximise K1 over centred polynomials ``g(y) = sum_{k=1..D} b_k (y / s)**k``.

    K1 is a Rayleigh quotient in ``b``; the maximiser is ``b ~ M^-1 u`` with
    ``M`` the sample covariance of the basis and ``u`` its covariance with
    ``x``. ``s = max |y|`` keeps the monomials on ``[-1, 1]``.
    """
    if degree < 1:
        raise PreconditionError("degree must be >= 1")
    y, x = ds.y, ds.x
    s = float(np.max(np.abs(y)))
    if s == 0:
        raise DegeneracyError("output column is identically zero")
    t = y / s
    phi = np.vstack([t**k for k in range(1, degree + 1)])
    means = phi.mean(axis=1)
    phi = phi - means[:, None]
    n = y.size
    M = phi @ phi.T / n
    u = phi @ x / n
    cond = np.linalg.cond(M)
    if not cond <= MAX_CONDITION:
        raise DegeneracyError(
            f"basis moment matrix is singular (condition {cond:.2e}); use a smaller degree"
        )
    Mr = M + RIDGE * np.trace(M) / degree * np.eye(degree)
    b = np.linalg.solve(Mr, u)
    b /= math.sqrt(float(b @ M @ b))
    h = b @ phi
    k1 = _k1_from_h(x, h)
    cfg = ds.config
    ceiling = cfg.sigma_x2 / cfg.sigma_z2
    diagnostics = [f"condition number {cond:.3e}"]
    if k1.value < ceiling - 4 * k1.stderr:
        diagnostics.append(
            f"K1 {k1.value:.4f} is below the invertible-case ceiling {ceiling:.4f}; "
            f"f may not be invertible"
        )
    # c * g(y) ~ z for an invertible f: E[x g] = sigma_x2 / c
    scale_c = cfg.sigma_x2 / float(np.mean(x * h))
    return IdentResult(b, s, scale_c, k1.value, np.zeros(degree), degree, basis="monomial",
                       offset=float(b @ means), score_stderr=k1.stderr,
                       diagnostics=diagnostics, fitted=h)


def recover_scale(result, ds, noise_seed=1):
    """Scale ``c`` such that ``y ~ c * fhat(z)``.

    The unobserved ``z`` is replaced by two independent synthetic versions
    ``x + w'`` and ``x + w''``; ``c = E[y fhat(x + w')] / E[fhat(x + w'') fhat(x + w')]``.
    Both expectations share the joint law of ``(z, x + w')``, so the ratio is
    free of the attenuation a plain regression on ``fhat(x + w')`` would
    suffer.
    """
    if result.basis != "hermite":
        raise PreconditionError("scale recovery needs a Hermite-series result")
    if not np.any(np.asarray(result.coeffs) != 0):
        raise DegeneracyError("estimated function has zero energy")
    if not np.any(ds.y != 0):
        raise DegeneracyError("output column is identically zero")
    cfg = ds.config
    w1 = synth_noise(cfg, noise_seed)
    w2 = synth_noise(cfg, noise_seed + 1)
    f1 = result(ds.x + w1)
    f2 = result(ds.x + w2)
    den = float(np.mean(f1 * f2))
    if den == 0:
        raise DegeneracyError("estimated function has zero energy on the data")
    return float(np.mean(ds.y * f1)) / den
