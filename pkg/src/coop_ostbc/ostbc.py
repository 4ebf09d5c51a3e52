"""Modulation mapping, distributed Alamouti coding, and the 4-antenna code.

Codeword convention: rows index transmit antennas, columns index time
slots. For the two-node Alamouti scheme row 0 is the base station (BS)
antenna and row 1 the relay (RS) antenna. The per-node power split is
carried by :class:`ImbalanceRatio`: the BS antenna transmits with
amplitude weight w_B = sqrt(1/(1+r)) and the RS antenna with
w_R = sqrt(r/(1+r)), where r is the linear RS-to-BS received-SNR ratio.

All operations accept complex scalars or equally-shaped complex arrays
(one entry per fading block); the Monte Carlo engine relies on the array
form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Modulation",
    "BPSK",
    "QPSK",
    "QAM16",
    "modulation_by_name",
    "ImbalanceRatio",
    "AlamoutiBlock",
    "modulate",
    "alamouti_encode",
    "transmit",
    "alamouti_combine",
    "effective_gain",
    "detect",
    "ostbc4_weights",
    "ostbc4_encode",
    "ostbc4_transmit",
    "ostbc4_combine",
    "ostbc4_effective_gain",
]


def _gray_pam4(b_hi: int, b_lo: int) -> float:
    # Gray-labelled 4-PAM axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
    return {(0, 0): -3.0, (0, 1): -1.0, (1, 1): 1.0, (1, 0): 3.0}[(b_hi, b_lo)]


def _build_constellations() -> dict:
    bpsk = np.array([1.0 + 0.0j, -1.0 + 0.0j])
    qpsk = np.array(
        [
            ((1 - 2 * b0) + 1j * (1 - 2 * b1)) / math.sqrt(2.0)
            for b0 in (0, 1)
            for b1 in (0, 1)
        ]
    )
    qam16 = np.array(
        [
            (_gray_pam4(b0, b1) + 1j * _gray_pam4(b2, b3)) / math.sqrt(10.0)
            for b0 in (0, 1)
            for b1 in (0, 1)
            for b2 in (0, 1)
            for b3 in (0, 1)
        ]
    )
    return {"BPSK": bpsk, "QPSK": qpsk, "QAM16": qam16}


_CONSTELLATIONS = _build_constellations()


@dataclass(frozen=True)
class Modulation:
    """Unit-average-energy, Gray-labelled constellation.

    ``points[i]`` is the symbol whose bit label is the binary expansion
    of ``i``, most significant bit first. ``a_constant`` feeds the
    closed-form error analysis and exists only for BPSK and QPSK.
    """

    name: str
    bits_per_symbol: int
    a_constant: float | None

    @property
    def points(self) -> np.ndarray:
        return _CONSTELLATIONS[self.name]


BPSK = Modulation("BPSK", 1, math.sqrt(2.0))
QPSK = Modulation("QPSK", 2, 1.0)
QAM16 = Modulation("QAM16", 4, None)

_MODULATIONS = {m.name: m for m in (BPSK, QPSK, QAM16)}


def modulation_by_name(name: str) -> Modulation:
    try:
        return _MODULATIONS[name.upper()]
    except KeyError:
        raise ValueError(
            f"unknown modulation {name!r}; expected one of {sorted(_MODULATIONS)}"
        ) from None


@dataclass(frozen=True)
class ImbalanceRatio:
    """Linear RS-to-BS SNR ratio r and the derived power weights.

    w_B_sq + w_R_sq == 1 exactly (total-power conservation); the
    amplitude weights are their square roots.
    """

    r: float
    w_B: float = field(init=False)
    w_R: float = field(init=False)
    w_B_sq: float = field(init=False)
    w_R_sq: float = field(init=False)

    def __post_init__(self):
        r = float(self.r)
        if not (math.isfinite(r) and r > 0.0):
            raise ValueError(f"imbalance ratio must be finite and > 0, got {r}")
        w_b_sq = 1.0 / (1.0 + r)
        w_r_sq = 1.0 - w_b_sq
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "w_B_sq", w_b_sq)
        object.__setattr__(self, "w_R_sq", w_r_sq)
        object.__setattr__(self, "w_B", math.sqrt(w_b_sq))
        object.__setattr__(self, "w_R", math.sqrt(w_r_sq))

    @classmethod
    def from_linear(cls, r: float) -> "ImbalanceRatio":
        return cls(r)

    @classmethod
    def from_db(cls, r_db: float) -> "ImbalanceRatio":
        return cls(10.0 ** (float(r_db) / 10.0))


@dataclass
class AlamoutiBlock:
    """Two symbols and their 2x2 space-time codeword."""

    s0: complex
    s1: complex

    @property
    def codeword(self) -> np.ndarray:
        s0 = np.asarray(self.s0, dtype=complex)
        s1 = np.asarray(self.s1, dtype=complex)
        return np.array([[s0, -s1.conj()], [s1, s0.conj()]])


def modulate(bits, mod: Modulation) -> np.ndarray:
    """Map a bit vector (MSB-first per symbol) onto constellation symbols."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    bps = mod.bits_per_symbol
    if bits.size % bps != 0:
        raise ValueError(
            f"bit count {bits.size} is not a multiple of {bps} ({mod.name})"
        )
    groups = bits.reshape(-1, bps).astype(np.int64)
    weights = 1 << np.arange(bps - 1, -1, -1)
    idx = groups @ weights
    return mod.points[idx]


def alamouti_encode(s0, s1) -> AlamoutiBlock:
    """Form the rate-1 two-antenna codeword [[s0, -s1*], [s1, s0*]]."""
    return AlamoutiBlock(s0=s0, s1=s1)


def transmit(
    block: AlamoutiBlock,
    ch,
    total_power: float,
    imb: ImbalanceRatio,
    noise,
):
    """Received samples (y_t0, y_t1) for one Alamouti block.

    y_t0 = sqrt(P) (w_B h_B s0 + w_R h_R s1) + z0
    y_t1 = sqrt(P) (-w_B h_B s1* + w_R h_R s0*) + z1

    ``noise`` is a 2-sequence (z0, z1) of scalars or block-shaped arrays.
    """
    total_power = float(total_power)
    if not (math.isfinite(total_power) and total_power >= 0.0):
        raise ValueError(f"total power must be finite and >= 0, got {total_power}")
    amp = math.sqrt(total_power)
    s0 = np.asarray(block.s0, dtype=complex)
    s1 = np.asarray(block.s1, dtype=complex)
    z0, z1 = noise[0], noise[1]
    gb = imb.w_B * np.asarray(ch.h_B, dtype=complex)
    gr = imb.w_R * np.asarray(ch.h_R, dtype=complex)
    y0 = amp * (gb * s0 + gr * s1) + z0
    y1 = amp * (-gb * s1.conj() + gr * s0.conj()) + z1
    return np.array([y0, y1])


def alamouti_combine(y, est, imb: ImbalanceRatio):
    """Imbalance-aware Alamouti combining with the estimated channels.

    [s~0; s~1] = [[w_B hhat_B*, w_R hhat_R], [w_R hhat_R*, -w_B hhat_B]]
                 . [y_t0; y_t1*]
    """
    hb = np.asarray(est.hhat_B, dtype=complex)
    hr = np.asarray(est.hhat_R, dtype=complex)
    y0 = np.asarray(y[0], dtype=complex)
    y1c = np.asarray(y[1], dtype=complex).conj()
    s0t = imb.w_B * hb.conj() * y0 + imb.w_R * hr * y1c
    s1t = imb.w_R * hr.conj() * y0 - imb.w_B * hb * y1c
    return s0t, s1t


def effective_gain(gain_b, gain_r, imb: ImbalanceRatio):
    """Combined channel gain w_B^2 |gain_b|^2 + w_R^2 |gain_r|^2."""
    gb = np.asarray(gain_b, dtype=complex)
    gr = np.asarray(gain_r, dtype=complex)
    out = imb.w_B_sq * (gb.real**2 + gb.imag**2) + imb.w_R_sq * (
        gr.real**2 + gr.imag**2
    )
    return out if out.ndim else float(out)


def detect(s_tilde, effective_gain, mod: Modulation) -> np.ndarray:
    """Nearest-point decision on s_tilde / effective_gain, back to bits.

    Ties on decision boundaries resolve deterministically toward the
    lexicographically smallest bit label. Returns a flat uint8 bit
    vector, ``bits_per_symbol`` bits per input symbol, MSB first.
    """
    g = np.asarray(effective_gain, dtype=float)
    if not np.all(g > 0.0):
        raise ValueError("effective gain must be positive")
    z = np.atleast_1d(np.asarray(s_tilde, dtype=complex) / g)
    diff = z[:, None] - mod.points[None, :]
    # argmin takes the first minimum, i.e. the smallest bit label.
    idx = np.argmin(diff.real**2 + diff.imag**2, axis=1)
    bps = mod.bits_per_symbol
    shifts = np.arange(bps - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8).ravel()


# --- 4-transmit-antenna code (two antennas per node, rate 3/4) ---------------
#
# Codeword, rows = antennas (0,1 at the BS; 2,3 at the RS), columns = slots:
#
#   [[ s0, -s1*, -s2*,  0  ],
#    [ s1,  s0*,  0,   -s2*],
#    [ s2,  0,    s0*,  s1*],
#    [ 0,   s2,  -s1,   s0 ]]
#
# Rows are pairwise orthogonal with common norm |s0|^2+|s1|^2+|s2|^2, which
# is what lets the matched-filter combiner below decouple the symbols.


def ostbc4_weights(imb: ImbalanceRatio) -> np.ndarray:
    """Per-antenna amplitude weights: each node splits its power equally."""
    half = math.sqrt(0.5)
    return np.array([imb.w_B * half, imb.w_B * half, imb.w_R * half, imb.w_R * half])


def ostbc4_encode(s0, s1, s2) -> np.ndarray:
    """Rate-3/4 orthogonal codeword for 4 transmit antennas.

    Shape (4, 4) for scalar symbols, (4, 4, ...) for array symbols.
    """
    s0, s1, s2 = np.broadcast_arrays(
        *(np.asarray(s, dtype=complex) for s in (s0, s1, s2))
    )
    z = np.zeros_like(s0)
    return np.array(
        [
            [s0, -s1.conj(), -s2.conj(), z],
            [s1, s0.conj(), z, -s2.conj()],
            [s2, z, s0.conj(), s1.conj()],
            [z, s2, -s1, s0],
        ]
    )


def ostbc4_transmit(codeword, channel_matrix, total_power, imb: ImbalanceRatio, noise):
    """Received matrix Y for the 4-antenna code.

    Y[j, t] = sqrt(P) * sum_i w_i H[i, j] codeword[i, t] + noise[j, t],
    with H of shape (4, n_rx[, blocks]) and noise/Y of shape
    (n_rx, 4[, blocks]).
    """
    total_power = float(total_power)
    if not (math.isfinite(total_power) and total_power >= 0.0):
        raise ValueError(f"total power must be finite and >= 0, got {total_power}")
    h = np.asarray(channel_matrix, dtype=complex)
    c = np.asarray(codeword, dtype=complex)
    if h.shape[0] != 4 or c.shape[:2] != (4, 4):
        raise ValueError(
            f"expected a (4, n_rx, ...) channel and (4, 4, ...) codeword, "
            f"got {h.shape} and {c.shape}"
        )
    w = ostbc4_weights(imb)
    y = math.sqrt(total_power) * np.einsum("i,ij...,it...->jt...", w, h, c)
    return y + np.asarray(noise, dtype=complex)


def ostbc4_combine(y, est, imb: ImbalanceRatio):
    """Matched-filter combining for the 4-antenna code over all rx antennas.

    ``y`` has shape (n_rx, 4[, blocks]) and ``est`` (the estimated channel
    matrix) shape (4, n_rx[, blocks]). With perfect estimates and no noise
    each output is sqrt(P) * G * s_k with G from
    :func:`ostbc4_effective_gain`.
    """
    y = np.asarray(y, dtype=complex)
    est = np.asarray(est, dtype=complex)
    if est.shape[0] != 4 or y.ndim < 2 or y.shape[1] != 4:
        raise ValueError(f"dimension mismatch: y {y.shape}, est {est.shape}")
    if est.shape[1] != y.shape[0] or est.shape[2:] != y.shape[2:]:
        raise ValueError(f"dimension mismatch: y {y.shape}, est {est.shape}")
    w = ostbc4_weights(imb)
    g = w.reshape((4,) + (1,) * (est.ndim - 1)) * est
    r0, r1, r2, r3 = (y[:, t] for t in range(4))
    g0, g1, g2, g3 = (g[i] for i in range(4))
    s0t = (g0.conj() * r0 + g1 * r1.conj() + g2 * r2.conj() + g3.conj() * r3).sum(axis=0)
    s1t = (g1.conj() * r0 - g0 * r1.conj() - g3.conj() * r2 + g2 * r3.conj()).sum(axis=0)
    s2t = (g2.conj() * r0 + g3.conj() * r1 - g0 * r2.conj() - g1 * r3.conj()).sum(axis=0)
    return s0t, s1t, s2t


def ostbc4_effective_gain(est, imb: ImbalanceRatio):
    """Combined gain sum_ij w_i^2 |est[i, j]|^2 over all 8 paths."""
    est = np.asarray(est, dtype=complex)
    if est.shape[0] != 4:
        raise ValueError(f"expected a (4, n_rx, ...) channel matrix, got {est.shape}")
    w_sq = ostbc4_weights(imb) ** 2
    per_antenna = (est.real**2 + est.imag**2).sum(axis=1)
    out = np.einsum("i,i...->...", w_sq, per_antenna)
    return out if getattr(out, "ndim", 0) else float(out)
