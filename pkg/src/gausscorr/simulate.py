"""Seeded Monte Carlo for Gaussian pairs and the noisy nonlinearity chain.

Random streams are addressed by ``(seed, stream)`` and sample index. Every
stream is a Philox generator keyed by ``(seed, stream)``; sample ``i`` is
derived from raw draw ``i`` of that stream, and a chunk starting at ``i0``
advances the counter instead of drawing. Output therefore depends only on
the seeds, never on how samples are split into chunks or which thread
generates them. Normal variates come from the inverse CDF of the uniforms.

Stream ids: 0 = signal / first pair component, 1 = channel noise / second
pair component, 2 = synthetic noise.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

from .errors import PreconditionError
from .functions import as_function, label_of, parse_function
from .mehler import GaussianPairParams

SIGNAL, NOISE, SYNTH = 0, 1, 2
_MASK64 = (1 << 64) - 1


def _uniforms(seed, stream, start, count):
    # Philox emits 4 raw words per counter step; advance() moves whole steps.
    bg = Philox(key=np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64))
    skip, lead = divmod(int(start), 4)
    if skip:
        bg.advance(skip)
    raw = bg.random_raw(int(lead + count))[lead:]
    # 53-bit mantissa, midpoint offset keeps u strictly inside (0, 1)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def standard_normals(seed, stream, n, chunks=1, start=0):
    """``n`` standard normal draws from stream ``(seed, stream)`` starting at index ``start``.

    Chunks are generated concurrently; the result is identical for any
    ``chunks``.
    """
    if n < 0:
        raise PreconditionError("sample count must be >= 0")
    if chunks < 1:
        raise PreconditionError("chunks must be >= 1")
    out = np.empty(n)
    bounds = np.linspace(0, n, min(chunks, max(n, 1)) + 1).astype(int)

    def fill(i):
        a, b = bounds[i], bounds[i + 1]
        out[a:b] = ndtri(_uniforms(seed, stream, start + a, b - a))

    if len(bounds) > 2:
        with ThreadPoolExecutor() as ex:
            list(ex.map(fill, range(len(bounds) - 1)))
    else:
        fill(0)
    return out


def sample_bivariate(p, n, seed, chunks=1):
    """``n`` draws of the pair ``(Z1, Z2)`` with ``Z2 = rho Z1 + sqrt(1 - rho**2) V``."""
    if not isinstance(p, GaussianPairParams):
        p = GaussianPairParams(*p)
    if n < 1:
        raise PreconditionError("sample count must be >= 1")
    u = standard_normals(seed, 0, n, chunks)
    v = standard_normals(seed, 1, n, chunks)
    z1 = p.sigma * u
    z2 = p.sigma * (p.rho * u + math.sqrt(1.0 - p.rho**2) * v)
    return z1, z2


@dataclass(frozen=True)
class ChainConfig:
    """Configuration of the chain ``y = f(x + w)`` with Gaussian ``x`` and ``w``."""

    sigma_x2: float
    sigma_w2: float
    f: object
    samples: int
    seed: int = 0
    chunks: int = 1

    def __post_init__(self):
        object.__setattr__(self, "f", as_function(self.f))
        if not self.sigma_x2 > 0:
            raise PreconditionError("sigma_x2 must be > 0")
        if not self.sigma_w2 > 0:
            raise PreconditionError("sigma_w2 must be > 0")
        if self.samples < 1:
            raise PreconditionError("samples must be >= 1")
        if self.chunks < 1:
            raise PreconditionError("chunks must be >= 1")
        if not 0 <= self.seed <= _MASK64:
            raise PreconditionError("seed must be a 64-bit unsigned integer")

    @property
    def sigma_z2(self):
        return self.sigma_x2 + self.sigma_w2

    @property
    def sigma_z(self):
        return math.sqrt(self.sigma_z2)

    @property
    def alpha(self):
        return math.sqrt(self.sigma_z2 / self.sigma_x2)

    def to_dict(self):
        return {
            "sigma_x2": float(self.sigma_x2),
            "sigma_w2": float(self.sigma_w2),
            "f": label_of(self.f),
            "samples": int(self.samples),
            "seed": int(self.seed),
            "chunks": int(self.chunks),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["sigma_x2"], d["sigma_w2"], parse_function(d["f"]),
                   int(d["samples"]), int(d["seed"]), int(d.get("chunks", 1)))


@dataclass(frozen=True, eq=False)
class ChainDataset:
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    config: ChainConfig
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("x", "z", "y"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not self.x.shape == self.z.shape == self.y.shape:
            raise PreconditionError("columns must have equal length")
        object.__setattr__(self, "stats", {
            name: {"mean": float(getattr(self, name).mean()),
                   "var": float(getattr(self, name).var())}
            for name in ("x", "z", "y")
        })

    def __len__(self):
        return self.x.size

    def scaled_y(self, c):
        """Copy with the output column multiplied by ``c``."""
        return ChainDataset(self.x, self.z, c * self.y, self.config)


def run_chain(cfg):
    """Simulate ``x ~ N(0, sigma_x2)``, ``w ~ N(0, sigma_w2)``, ``z = x + w``, ``y = f(z)``."""
    x = math.sqrt(cfg.sigma_x2) * standard_normals(cfg.seed, SIGNAL, cfg.samples, cfg.chunks)
    w = math.sqrt(cfg.sigma_w2) * standard_normals(cfg.seed, NOISE, cfg.samples, cfg.chunks)
    z = x + w
    return ChainDataset(x, z, np.asarray(cfg.f(z), dtype=float), cfg)


def channel_noise(cfg):
    """Regenerate the (normally unobserved) noise column of a chain run."""
    return math.sqrt(cfg.sigma_w2) * standard_normals(cfg.seed, NOISE, cfg.samples, cfg.chunks)


def synth_noise(cfg, seed2):
    """Synthetic noise ``w'`` with the chain's noise variance, on its own stream."""
    return math.sqrt(cfg.sigma_w2) * standard_normals(seed2, SYNTH, cfg.samples, cfg.chunks)


def estimate_moment(columns, transforms=None):
    """Time average of the row-wise product of transformed columns.

    Returns ``(estimate, standard_error)`` with ``SE = std / sqrt(n)``.
    ``transforms`` aligns with ``columns``; ``None`` entries mean identity.
    """
    cols = [np.asarray(c, dtype=float) for c in columns]
    if not cols:
        raise PreconditionError("need at least one column")
    n = cols[0].size
    if any(c.size != n for c in cols):
        raise PreconditionError("columns must have equal length")
    if n < 2:
        raise PreconditionError("need at least two samples")
    transforms = transforms or [None] * len(cols)
    if len(transforms) != len(cols):
        raise PreconditionError("one transform per column")
    prod = np.ones(n)
    for c, t in zip(cols, transforms):
        prod = prod * (c if t is None else np.asarray(as_function(t)(c), dtype=float))
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(n))


def write_dataset(ds, path):
    """Write columns ``x,z,y`` as CSV plus a ``<path>.json`` sidecar with the config."""
    path = Path(path)
    data = np.column_stack([ds.x, ds.z, ds.y])
    with path.open("w", newline="\n") as fh:
        fh.write("x,z,y\n")
        np.savetxt(fh, data, fmt="%.16e", delimiter=",")
    sidecar = dict(ds.config.to_dict(), columns=["x", "z", "y"])
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def read_dataset(path):
    path = Path(path)
    meta = json.loads(Path(str(path) + ".json").read_text())
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    cfg = ChainConfig.from_dict(meta)
    return ChainDataset(data[:, 0], data[:, 1], data[:, 2], cfg)
