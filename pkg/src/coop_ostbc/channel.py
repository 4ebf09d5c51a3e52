"""Rayleigh link realizations, AWGN, and the additive estimation-error model.

The two downlink gains (base station to user, relay to user) are drawn
i.i.d. CN(0, 1) per block. The receiver's channel estimate is modeled as
``hhat = h + n`` with ``n ~ CN(0, beta)`` independent of the channel; the
equivalent regression decomposition ``h = rho * hhat + residual`` with
``rho = 1 / (1 + beta)`` is exposed through :func:`decompose_model`.

All fields may hold complex scalars or equally-shaped complex arrays; the
array form is what the Monte Carlo engine uses to process whole batches
of fading blocks at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import RngStream, sample_circular_gaussian

__all__ = [
    "ChannelPair",
    "EstimatedChannelPair",
    "EstimationErrorModel",
    "decompose_model",
    "sample_channel",
    "estimate_channel",
    "sample_awgn",
]


@dataclass
class ChannelPair:
    """One Rayleigh realization of the two link gains."""

    h_B: complex
    h_R: complex


@dataclass
class EstimatedChannelPair:
    """Receiver-side estimates of the two link gains."""

    hhat_B: complex
    hhat_R: complex


@dataclass(frozen=True)
class EstimationErrorModel:
    """Estimation-error variance beta and its regression decomposition.

    rho = 1 / (1 + beta) and sigma_d_sq = 1 - rho, so the identity
    sigma_d_sq == 1 - rho holds exactly in floating point.
    """

    beta: float
    rho: float
    sigma_d_sq: float


def decompose_model(beta: float) -> EstimationErrorModel:
    """Build the regression decomposition for error variance ``beta``."""
    beta = float(beta)
    if not (math.isfinite(beta) and beta >= 0.0):
        raise ValueError(f"beta must be finite and >= 0, got {beta}")
    rho = 1.0 / (1.0 + beta)
    return EstimationErrorModel(beta=beta, rho=rho, sigma_d_sq=1.0 - rho)


def sample_channel(rng: RngStream, size=None) -> ChannelPair:
    """Draw independent CN(0,1) gains for both links (h_B first, then h_R)."""
    h_b = sample_circular_gaussian(rng, 1.0, size)
    h_r = sample_circular_gaussian(rng, 1.0, size)
    return ChannelPair(h_B=h_b, h_R=h_r)


def estimate_channel(
    rng: RngStream, true_channel: ChannelPair, model: EstimationErrorModel
) -> EstimatedChannelPair:
    """Corrupt the true gains with independent CN(0, beta) estimation errors.

    With beta == 0 the estimates equal the true gains exactly. Error draws
    are consumed in the order n_B then n_R, with the same shape as the
    corresponding true gain.
    """
    size_b = getattr(true_channel.h_B, "shape", None)
    size_r = getattr(true_channel.h_R, "shape", None)
    n_b = sample_circular_gaussian(rng, model.beta, size_b)
    n_r = sample_circular_gaussian(rng, model.beta, size_r)
    return EstimatedChannelPair(
        hhat_B=true_channel.h_B + n_b,
        hhat_R=true_channel.h_R + n_r,
    )


def sample_awgn(rng: RngStream, length: int):
    """Vector of ``length`` i.i.d. CN(0,1) noise samples."""
    length = int(length)
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    return sample_circular_gaussian(rng, 1.0, length)
