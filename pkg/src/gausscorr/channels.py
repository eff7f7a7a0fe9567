"""Conditionally i.i.d. pairs: ``Z1`` and ``Z2`` are two independent passes of a
latent ``Z`` through the same channel.

For such pairs ``E[g1(Z1) g2(Z2)] = E[h1(Z) h2(Z)]`` with the conditional
means ``h_i(z) = E[g_i(Z1) | Z = z]``, and the squared-correlation
inequality reduces to Cauchy-Schwarz on ``h1``, ``h2``. Finite channels are
handled exactly; the Gaussian channel uses quadrature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ChannelError, PreconditionError
from .functions import as_function, label_of
from .hermite import (
    DEFAULT_NODES,
    MOMENT_HALF_WIDTH,
    _panel_edges,
    gauss_hermite_rule,
    panel_nodes,
)
from .inequality import CorrelationReport

MAX_OUTCOMES = 2**20
PROB_ATOL = 1e-12
EXACT_TOL = 1e-12
QUAD_TOL = 1e-8


class ConditionalChannel:
    """Base class: a latent law plus a conditional law for each output."""


@dataclass(frozen=True, eq=False)
class FiniteChannel(ConditionalChannel):
    """Latent values with probabilities and a row-stochastic transition matrix.

    ``transition[k, j] = P(Z_i = outputs[j] | Z = latent[k])``.
    """

    latent: tuple
    latent_probs: np.ndarray
    outputs: tuple
    transition: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.latent_probs, dtype=float)
        trans = np.atleast_2d(np.asarray(self.transition, dtype=float))
        if probs.shape != (len(self.latent),):
            raise ChannelError("one probability per latent value")
        if trans.shape != (len(self.latent), len(self.outputs)):
            raise ChannelError("transition must be (latent values) x (outputs)")
        if np.any(probs < 0) or abs(probs.sum() - 1) > PROB_ATOL:
            raise ChannelError("latent probabilities must be nonnegative and sum to 1")
        if np.any(trans < 0) or np.any(np.abs(trans.sum(axis=1) - 1) > PROB_ATOL):
            raise ChannelError("each conditional row must be nonnegative and sum to 1")
        if len(set(self.outputs)) != len(self.outputs) or len(set(self.latent)) != len(self.latent):
            raise ChannelError("latent values and outputs must be distinct")
        probs.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "latent", tuple(self.latent))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "latent_probs", probs)
        object.__setattr__(self, "transition", trans)

    @property
    def joint_outcomes(self):
        return len(self.latent) * len(self.outputs) ** 2

    def table(self, g):
        """Values of ``g`` on the output alphabet as an array.

        ``g`` may be a mapping keyed by output symbol (or its string form), a sequence aligned
        with :attr:`outputs`, or a callable taking one symbol.
        """
        if isinstance(g, dict):
            # JSON tables key every symbol by its string form
            keyed = {o: (o if o in g else str(o)) for o in self.outputs}
            missing = [o for o, k in keyed.items() if k not in g]
            if missing:
                raise ChannelError(f"function undefined on output symbol {missing[0]!r}")
            vals = [g[keyed[o]] for o in self.outputs]
        elif callable(g):
            vals = [g(o) for o in self.outputs]
        else:
            vals = list(g)
            if len(vals) != len(self.outputs):
                raise ChannelError(
                    f"value table has {len(vals)} entries for {len(self.outputs)} symbols"
                )
        vals = np.asarray(vals, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ChannelError("function values must be finite")
        return vals

    def to_dict(self):
        return {
            "latent": {str(v): float(p) for v, p in zip(self.latent, self.latent_probs)},
            "conditional": {
                str(v): {str(o): float(q) for o, q in zip(self.outputs, row)}
                for v, row in zip(self.latent, self.transition)
            },
        }

    @classmethod
    def from_dict(cls, d):
        if {"n_bits", "p", "q"} <= d.keys():
            return BernoulliXorChannel(int(d["n_bits"]), float(d["p"]), float(d["q"])).to_channel()
        try:
            latent = list(d["latent"])
            probs = [float(d["latent"][k]) for k in latent]
            cond = d["conditional"]
        except (KeyError, TypeError) as exc:
            raise ChannelError(f"malformed channel spec: {exc}") from None
        outputs = []
        for k in latent:
            if k not in cond:
                raise ChannelError(f"no conditional law for latent value {k!r}")
            for o in cond[k]:
                if o not in outputs:
                    outputs.append(o)
        trans = [[float(cond[k].get(o, 0.0)) for o in outputs] for k in latent]
        return cls(tuple(latent), probs, tuple(outputs), trans)


@dataclass(frozen=True)
class BernoulliXorChannel:
    """``Z`` has i.i.d. Bernoulli(p) bits; ``Z_i = Z xor W_i`` with Bernoulli(q) noise bits.

    Bit vectors are encoded as integers ``0 .. 2**n_bits - 1``.
    """

    n_bits: int
    p: float
    q: float

    def __post_init__(self):
        if self.n_bits < 1:
            raise ChannelError("n_bits must be >= 1")
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ChannelError(f"{name} must lie in [0, 1]")

    def to_channel(self):
        size = 2**self.n_bits
        symbols = np.arange(size)
        ones = np.array([bin(s).count("1") for s in range(size)])
        n = self.n_bits
        latent = self.p**ones * (1 - self.p) ** (n - ones)
        flips = ones[symbols[:, None] ^ symbols[None, :]]
        trans = self.q**flips * (1 - self.q) ** (n - flips)
        return FiniteChannel(tuple(range(size)), latent, tuple(range(size)), trans)


@dataclass(frozen=True)
class GaussianChannel(ConditionalChannel):
    """``Z ~ N(0, latent_var)`` and ``Z_i = Z + W_i`` with ``W_i ~ N(0, noise_var)``."""

    latent_var: float
    noise_var: float

    def __post_init__(self):
        if not self.latent_var > 0 or not self.noise_var > 0:
            raise PreconditionError("latent and noise variances must be > 0")

    @property
    def sigma(self):
        return math.sqrt(self.latent_var + self.noise_var)

    @property
    def rho(self):
        return self.latent_var / (self.latent_var + self.noise_var)


def gaussian_as_channel(sigma, rho):
    """The pair with std ``sigma`` and correlation ``rho`` as a shared-latent channel."""
    if not sigma > 0:
        raise PreconditionError("sigma must be > 0")
    if not 0 < rho < 1:
        raise PreconditionError("rho must lie in (0, 1) for the additive channel form")
    return GaussianChannel(rho * sigma**2, (1 - rho) * sigma**2)


def _gaussian_h(ch, g, z, m=DEFAULT_NODES):
    # E[g(z + W)] for each z, W ~ N(0, noise_var)
    z = np.asarray(z, dtype=float)
    s = math.sqrt(ch.noise_var)
    if getattr(g, "is_polynomial", False):
        rule = gauss_hermite_rule(m)
        return np.asarray(g(z[:, None] + s * rule.nodes[None, :])) @ rule.weights
    base = _panel_edges(m, MOMENT_HALF_WIDTH)
    bps = np.asarray(getattr(g, "breakpoints", ()), dtype=float)
    if bps.size:
        moving = np.clip((bps[None, :] - z[:, None]) / s, -MOMENT_HALF_WIDTH, MOMENT_HALF_WIDTH)
        edges = np.sort(np.concatenate([np.broadcast_to(base, (z.size, base.size)), moving], axis=1), axis=1)
    else:
        edges = base[None, :]
    v, w = panel_nodes(edges)
    return np.sum(w * np.asarray(g(z[:, None] + s * v)), axis=1)


def conditional_mean(ch, g):
    """``h(z) = E[g(Z1) | Z = z]`` as a callable on the latent support."""
    if isinstance(ch, BernoulliXorChannel):
        ch = ch.to_channel()
    if isinstance(ch, FiniteChannel):
        h = ch.transition @ ch.table(g)
        lookup = dict(zip(ch.latent, h))

        def h_finite(z):
            try:
                return float(lookup[z])
            except KeyError:
                raise ChannelError(f"{z!r} is not a latent value") from None

        h_finite.values = h
        return h_finite
    if isinstance(ch, GaussianChannel):
        g = as_function(g)

        def h_gauss(z):
            arr = np.asarray(z, dtype=float)
            out = _gaussian_h(ch, g, arr.ravel()).reshape(arr.shape)
            return float(out) if out.ndim == 0 else out

        return h_gauss
    raise PreconditionError(f"unsupported channel type {type(ch).__name__}")


def enumerate_expectation(ch, g1, g2):
    """``E[g1(Z1) g2(Z2)]`` by exhaustive summation over ``(z, z1, z2)`` triples."""
    if isinstance(ch, BernoulliXorChannel):
        ch = ch.to_channel()
    if not isinstance(ch, FiniteChannel):
        raise PreconditionError("enumeration needs a finite channel")
    if ch.joint_outcomes > MAX_OUTCOMES:
        raise ChannelError(
            f"{ch.joint_outcomes} joint outcomes exceed the enumeration cap of {MAX_OUTCOMES}"
        )
    t1, t2 = ch.table(g1), ch.table(g2)
    P = ch.transition
    joint = ch.latent_probs[:, None, None] * P[:, :, None] * P[:, None, :]
    return float(np.sum(joint * t1[None, :, None] * t2[None, None, :]))


def _finite_label(g):
    if isinstance(g, dict):
        return json.dumps({str(k): v for k, v in g.items()}, sort_keys=True)
    if callable(g):
        return label_of(g)
    return json.dumps([float(v) for v in g])


def lemma2_check(ch, g1, g2, *, nodes=DEFAULT_NODES):
    """Squared-correlation check through conditional means.

    ``lhs = E[h1 h2]**2`` and ``rhs = E[h1**2] E[h2**2]``. Equality is
    flagged within 1e-12 for finite channels and 1e-8 for the Gaussian one.
    """
    if isinstance(ch, BernoulliXorChannel):
        ch = ch.to_channel()
    if isinstance(ch, FiniteChannel):
        h1 = ch.transition @ ch.table(g1)
        h2 = ch.transition @ ch.table(g2)
        w = ch.latent_probs
        e12, e11, e22 = w @ (h1 * h2), w @ (h1 * h1), w @ (h2 * h2)
        # Lagrange form of the gap: 0.5 sum_jk w_j w_k (h1_j h2_k - h1_k h2_j)**2
        d = np.outer(h1, h2)
        slack = 0.5 * float(w @ ((d - d.T) ** 2) @ w)
        tol, engine, sigma, rho = EXACT_TOL, "enumeration", float("nan"), float("nan")
        l1, l2 = _finite_label(g1), _finite_label(g2)
    elif isinstance(ch, GaussianChannel):
        g1, g2 = as_function(g1), as_function(g2)
        outer = gauss_hermite_rule(nodes)
        z = math.sqrt(ch.latent_var) * outer.nodes
        h1 = _gaussian_h(ch, g1, z, nodes)
        h2 = _gaussian_h(ch, g2, z, nodes)
        w = outer.weights
        e12, e11, e22 = w @ (h1 * h2), w @ (h1 * h1), w @ (h2 * h2)
        slack = None
        tol, engine, sigma, rho = QUAD_TOL, "channel-quadrature", ch.sigma, ch.rho
        l1, l2 = label_of(g1), label_of(g2)
    else:
        raise PreconditionError(f"unsupported channel type {type(ch).__name__}")
    lhs, rhs = float(e12 * e12), float(e11 * e22)
    if slack is None:
        slack = rhs - lhs
    if e11 == 0 or e22 == 0:
        slack, equality = 0.0, True
    else:
        equality = abs(slack) <= tol
    return CorrelationReport(l1, l2, sigma, rho, engine, lhs, rhs, float(slack),
                             bool(equality), tol)
