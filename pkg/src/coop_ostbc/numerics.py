"""Deterministic scalar numerics shared by the whole package.

Probabilities are plain floats in [0, 1]. All randomness flows through
``RngStream`` so that every sample sequence is reproducible from a
(seed, stream_id) pair.
"""

from __future__ import annotations

import math
from functools import lru_cache
from statistics import NormalDist
from typing import Callable

import numpy as np

__all__ = [
    "RngStream",
    "q_function",
    "integrate_half_pi",
    "sample_circular_gaussian",
    "wilson_interval",
]

_SQRT2 = math.sqrt(2.0)
_UINT64_MAX = (1 << 64) - 1


class RngStream:
    """Reproducible random stream keyed by (seed, stream_id).

    Backed by the Philox 4x64 counter-based generator
    (``numpy.random.Philox``) with the 128-bit key formed from the two
    64-bit ids. Identical (seed, stream_id) replay the exact same
    sequence from the start; distinct stream_ids give statistically
    independent streams, so parallel workers can each own one.

    Normal variates are produced by an explicit Box-Muller transform on
    the generator's uniforms, two N(0,1) draws per uniform pair, which
    keeps the consumption pattern fixed and easy to reason about.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        seed = int(seed)
        stream_id = int(stream_id)
        if not 0 <= seed <= _UINT64_MAX:
            raise ValueError(f"seed must fit in 64 bits, got {seed}")
        if not 0 <= stream_id <= _UINT64_MAX:
            raise ValueError(f"stream_id must fit in 64 bits, got {stream_id}")
        self.seed = seed
        self.stream_id = stream_id
        key = np.array([seed, stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def clone(self) -> "RngStream":
        """Fresh stream that replays this one from the beginning."""
        return RngStream(self.seed, self.stream_id)

    def uniforms(self, size=None):
        """Uniform draws on [0, 1)."""
        return self._gen.random(size)

    def bits(self, n: int) -> np.ndarray:
        """n equiprobable bits as a uint8 array."""
        return (self._gen.random(int(n)) < 0.5).astype(np.uint8)

    def normal_pairs(self, size=None):
        """Two independent N(0,1) arrays via one Box-Muller transform."""
        u1 = self._gen.random(size)
        u2 = self._gen.random(size)
        # 1 - u1 lies in (0, 1], so the log is finite.
        rad = np.sqrt(-2.0 * np.log1p(-u1))
        ang = (2.0 * math.pi) * u2
        return rad * np.cos(ang), rad * np.sin(ang)

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def q_function(x: float) -> float:
    """Upper-tail probability of the standard normal.

    Evaluated through the complementary error function,
    Q(x) = erfc(x / sqrt(2)) / 2, which is accurate over the full range
    and extends to negative x through erfc's own reflection.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"q_function requires finite input, got {x}")
    return 0.5 * math.erfc(x / _SQRT2)


@lru_cache(maxsize=16)
def _leggauss_half_pi(nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    theta = 0.25 * math.pi * (x + 1.0)
    weights = 0.25 * math.pi * w
    return theta, weights


def integrate_half_pi(f: Callable, nodes: int = 64) -> float:
    """Gauss-Legendre estimate of the integral of f over [0, pi/2].

    ``f`` may be vectorized over a numpy array of angles or accept one
    scalar at a time. Deterministic for a given node count.
    """
    nodes = int(nodes)
    if nodes < 2:
        raise ValueError(f"need at least 2 quadrature nodes, got {nodes}")
    theta, weights = _leggauss_half_pi(nodes)
    try:
        vals = np.asarray(f(theta), dtype=float)
        if vals.shape != theta.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(f(t)) for t in theta])
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("integrand returned a non-finite value")
    return float(np.dot(weights, vals))


def sample_circular_gaussian(rng: RngStream, variance: float, size=None):
    """Circularly-symmetric complex Gaussian draw(s) of the given variance.

    Real and imaginary parts are independent N(0, variance/2). Returns a
    complex scalar when ``size`` is None, else a complex array.
    """
    variance = float(variance)
    if not (math.isfinite(variance) and variance >= 0.0):
        raise ValueError(f"variance must be finite and >= 0, got {variance}")
    re, im = rng.normal_pairs(size)
    scale = math.sqrt(variance / 2.0)
    out = scale * (re + 1j * im)
    if size is None:
        return complex(out)
    return out


def wilson_interval(errors: int, trials: int, confidence: float = 0.95):
    """Wilson score interval for a binomial proportion.

    Returns (lo, hi) with lo <= errors/trials <= hi.
    """
    errors = int(errors)
    trials = int(trials)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= errors <= trials:
        raise ValueError(f"errors must be in [0, trials], got {errors}/{trials}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    z = NormalDist().inv_cdf(0.5 * (1.0 + confidence))
    phat = errors / trials
    z2_n = z * z / trials
    denom = 1.0 + z2_n
    center = (phat + 0.5 * z2_n) / denom
    half = (z / denom) * math.sqrt(phat * (1.0 - phat) / trials + 0.25 * z2_n / trials)
    # At the boundaries the interval endpoint is exact by construction.
    lo = 0.0 if errors == 0 else max(0.0, center - half)
    hi = 1.0 if errors == trials else min(1.0, center + half)
    return lo, hi
