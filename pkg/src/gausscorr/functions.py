"""Evaluable univariate test functions and their text syntax.

A :class:`FunctionSpec` is a small immutable description of one of the
builtin nonlinearities (``identity``, ``poly``, ``sign``, ``clip``, ``tanh``,
``deadzone``, ``abs``) or a wrapper around them (output scaling, input
dilation, composition). Specs are hashable, print back to their text form and
evaluate vectorised over numpy arrays.

Text grammar::

    spec   := [scale "*"] kind [":" params]
    params := number ("," number)*

Whitespace is ignored. ``scale`` is an optional multiplicative prefix, e.g.
``2.5*tanh:1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ParseError, PreconditionError

# kind -> (min params, max params or None)
_ARITY = {
    "identity": (0, 0),
    "poly": (1, None),
    "sign": (0, 0),
    "clip": (1, 1),
    "tanh": (1, 1),
    "deadzone": (1, 1),
    "abs": (0, 0),
}

_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def _fmt(v):
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


@dataclass(frozen=True)
class FunctionSpec:
    kind: str
    params: tuple = ()
    inner: tuple = ()
    label: str = field(default="", compare=False)

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        _validate(self.kind, params, self.inner)
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    def _default_label(self):
        if self.kind in _ARITY:
            if not self.params:
                return self.kind
            return self.kind + ":" + ",".join(_fmt(p) for p in self.params)
        if self.kind == "scaled":
            return f"{_fmt(self.params[0])}*{self.inner[0].label}"
        if self.kind == "dilated":
            return f"{self.inner[0].label}@({_fmt(self.params[0])}x)"
        return f"{self.inner[0].label}({self.inner[1].label})"

    def __str__(self):
        return self.label

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.params
        if k == "identity":
            return x.copy()
        if k == "poly":
            return np.polynomial.polynomial.polyval(x, p)
        if k == "sign":
            return np.sign(x)
        if k == "clip":
            return np.clip(x, -p[0], p[0])
        if k == "tanh":
            return np.tanh(p[0] * x)
        if k == "deadzone":
            return np.sign(x) * np.maximum(np.abs(x) - p[0], 0.0)
        if k == "abs":
            return np.abs(x)
        if k == "scaled":
            return p[0] * self.inner[0](x)
        if k == "dilated":
            return self.inner[0](p[0] * x)
        outer, first = self.inner
        return outer(first(x))

    # -- structure -------------------------------------------------------

    @property
    def is_polynomial(self):
        """True when the function is a polynomial (Gauss-Hermite rules are exact)."""
        if self.kind in ("identity", "poly"):
            return True
        if self.kind in ("scaled", "dilated"):
            return self.inner[0].is_polynomial
        if self.kind == "composed":
            return all(f.is_polynomial for f in self.inner)
        return False

    @property
    def degree(self):
        """Polynomial degree, or ``None`` for non-polynomials."""
        if not self.is_polynomial:
            return None
        if self.kind == "identity":
            return 1
        if self.kind == "poly":
            nz = np.flatnonzero(self.params)
            return int(nz[-1]) if nz.size else 0
        if self.kind == "scaled":
            return 0 if self.params[0] == 0 else self.inner[0].degree
        if self.kind == "dilated":
            return self.inner[0].degree
        return self.inner[0].degree * self.inner[1].degree

    @property
    def breakpoints(self):
        """Sorted points where the function or its derivative jumps."""
        k, p = self.kind, self.params
        if k in ("sign", "abs"):
            pts = (0.0,)
        elif k in ("clip", "deadzone"):
            pts = (-p[0], p[0]) if p[0] > 0 else (0.0,)
        elif k == "scaled":
            pts = self.inner[0].breakpoints
        elif k == "dilated":
            pts = tuple(b / p[0] for b in self.inner[0].breakpoints)
        elif k == "composed":
            outer, first = self.inner
            pts = first.breakpoints + _preimages(first, outer.breakpoints)
        else:
            pts = ()
        return tuple(sorted(set(pts)))

    @property
    def smooth(self):
        return not self.breakpoints

    # -- wrappers --------------------------------------------------------

    def scaled(self, c):
        """``x -> c * self(x)``."""
        return FunctionSpec("scaled", (c,), (self,))

    def dilated(self, s):
        """``x -> self(s * x)``."""
        return FunctionSpec("dilated", (s,), (self,))

    def reflected(self):
        """``x -> self(-x)``."""
        return self.dilated(-1.0)

    def compose(self, first):
        """``x -> self(first(x))``."""
        return FunctionSpec("composed", (), (self, first))


def _validate(kind, params, inner):
    if kind in _ARITY:
        lo, hi = _ARITY[kind]
        if len(params) < lo or (hi is not None and len(params) > hi):
            raise PreconditionError(f"{kind} takes {_arity_text(kind)}, got {len(params)}")
        if not all(np.isfinite(params)):
            raise PreconditionError(f"{kind} parameters must be finite")
        if kind == "clip" and not params[0] > 0:
            raise PreconditionError("clip level must be > 0")
        if kind == "tanh" and not params[0] > 0:
            raise PreconditionError("tanh slope must be > 0")
        if kind == "deadzone" and not params[0] >= 0:
            raise PreconditionError("deadzone width must be >= 0")
        if inner:
            raise PreconditionError(f"{kind} takes no inner functions")
    elif kind in ("scaled", "dilated"):
        if len(params) != 1 or len(inner) != 1 or not np.isfinite(params[0]):
            raise PreconditionError(f"{kind} needs one finite parameter and one inner function")
        if kind == "dilated" and params[0] == 0:
            raise PreconditionError("dilation factor must be nonzero")
    elif kind == "composed":
        if len(inner) != 2 or params:
            raise PreconditionError("composed needs exactly two inner functions")
    else:
        raise PreconditionError(f"unknown function kind {kind!r}")


def _arity_text(kind):
    lo, hi = _ARITY[kind]
    if hi is None:
        return f"at least {lo} parameter(s)"
    if lo == hi:
        return f"exactly {lo} parameter(s)"
    return f"{lo} to {hi} parameters"


def _preimages(f, levels, lo=-40.0, hi=40.0, n=4001):
    # Real solutions of f(x) = b, located by a sign-change scan plus brentq.
    if not levels:
        return ()
    grid = np.linspace(lo, hi, n)
    out = []
    for b in levels:
        d = f(grid) - b
        out.extend(grid[d == 0.0])
        idx = np.flatnonzero(d[:-1] * d[1:] < 0)
        for i in idx:
            out.append(brentq(lambda t: float(f(t)) - b, grid[i], grid[i + 1], xtol=1e-14))
    return tuple(out)


def parse_function(text):
    """Parse the text form of a function, e.g. ``"poly:0,1,0,0.2"`` or ``"clip:1"``.

    Raises :class:`~gausscorr.errors.ParseError` with the offset of the bad token.
    """
    if not isinstance(text, str):
        raise ParseError("function description must be a string", repr(text), 0)
    # Keep a map from compacted offsets back to the original string.
    keep = [i for i, ch in enumerate(text) if not ch.isspace()]
    s = "".join(text[i] for i in keep)

    def pos(i):
        return keep[i] if i < len(keep) else len(text)

    if not s:
        raise ParseError("empty function description", text, 0)

    scale = None
    body_start = 0
    if "*" in s:
        star = s.index("*")
        head = s[:star]
        if not _NUMBER.match(head):
            raise ParseError(f"invalid scale factor {head!r}", text, pos(0))
        scale = float(head)
        body_start = star + 1

    body = s[body_start:]
    kind, sep, rest = body.partition(":")
    if kind not in _ARITY:
        raise ParseError(f"unknown function kind {kind!r}", text, pos(body_start))

    params = []
    if sep:
        offset = body_start + len(kind) + 1
        if not rest:
            raise ParseError("missing parameter after ':'", text, pos(offset))
        for tok in rest.split(","):
            if not _NUMBER.match(tok):
                raise ParseError(f"invalid number {tok!r}", text, pos(offset))
            params.append(float(tok))
            offset += len(tok) + 1

    param_pos = pos(body_start + len(kind) + 1) if sep else pos(body_start)
    lo, hi = _ARITY[kind]
    if len(params) < lo or (hi is not None and len(params) > hi):
        raise ParseError(
            f"{kind} takes {_arity_text(kind)}, got {len(params)}", text, param_pos
        )
    try:
        spec = FunctionSpec(kind, tuple(params))
    except PreconditionError as exc:
        raise ParseError(str(exc), text, param_pos) from None
    if scale is not None:
        spec = spec.scaled(scale)
    return spec


def as_function(g):
    """Accept a :class:`FunctionSpec`, a text description, or pass through callables."""
    if isinstance(g, FunctionSpec):
        return g
    if isinstance(g, str):
        return parse_function(g)
    if callable(g):
        return g
    raise PreconditionError(f"cannot interpret {g!r} as a function")


def label_of(g):
    return getattr(g, "label", None) or getattr(g, "__name__", repr(g))


# The nine-function corpus used by sweeps and acceptance checks.
CORPUS = (
    "identity",
    "poly:0,0,1",
    "poly:0,0,0,1",
    "poly:0,1,0,0.2",
    "sign",
    "clip:1",
    "tanh:1",
    "abs",
    "deadzone:0.5",
)

SMOOTH_CORPUS = ("identity", "poly:0,0,1", "poly:0,0,0,1", "poly:0,1,0,0.2", "poly:1,-1,0.5,0,0,0.1", "tanh:1")
