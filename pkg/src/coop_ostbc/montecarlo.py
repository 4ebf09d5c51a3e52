"""Seeded Monte Carlo BER estimation over the full transmit/receive chain.

Work is split into fixed-size chunks of fading blocks. Chunk ``k`` of a
point draws everything it needs from ``RngStream(point.seed, k)``, so the
random plan is a pure function of the point: results are bit-identical
for any worker count and chunks can run concurrently without shared
state. A point stops after the first chunk at which the cumulative error
count reaches ``min_errors`` or the cumulative bit count reaches
``max_bits``, scanning chunks in index order.

Sweeps derive one seed per grid cell from the sweep seed and the cell
parameters, so a cell's estimate does not depend on which other cells
are present in the grid.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

from . import analytic, channel, ostbc
from .numerics import RngStream, sample_circular_gaussian, wilson_interval

__all__ = [
    "SCHEMES",
    "SimPoint",
    "BerEstimate",
    "merge",
    "run_point",
    "derive_seed",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "run_sweep",
]

SCHEMES = ("alamouti_2x1", "ostbc_4x2")

DEFAULT_CHUNK_BLOCKS = 10_000
DEFAULT_MIN_ERRORS = 100
DEFAULT_MAX_BITS = 10**8
CONFIDENCE = 0.95

_SYMBOLS_PER_BLOCK = {"alamouti_2x1": 2, "ostbc_4x2": 3}


@dataclass(frozen=True)
class SimPoint:
    """One Monte Carlo cell: scheme, modulation, SNR, imbalance, beta, seed."""

    scheme: str
    mod: ostbc.Modulation
    gamma_db: float
    r_db: float
    beta: float
    seed: int
    min_errors: int = DEFAULT_MIN_ERRORS
    max_bits: int = DEFAULT_MAX_BITS
    chunk_blocks: int = DEFAULT_CHUNK_BLOCKS

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected {SCHEMES}")
        if not isinstance(self.mod, ostbc.Modulation):
            raise ValueError(f"mod must be a Modulation, got {self.mod!r}")
        if not (math.isfinite(self.beta) and self.beta >= 0.0):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")
        if self.min_errors < 1:
            raise ValueError(f"min_errors must be >= 1, got {self.min_errors}")
        if self.max_bits < self.mod.bits_per_symbol:
            raise ValueError(
                f"max_bits must be at least one symbol ({self.mod.bits_per_symbol} "
                f"bits), got {self.max_bits}"
            )
        if self.chunk_blocks < 1:
            raise ValueError(f"chunk_blocks must be >= 1, got {self.chunk_blocks}")

    @property
    def bits_per_block(self) -> int:
        return _SYMBOLS_PER_BLOCK[self.scheme] * self.mod.bits_per_symbol


@dataclass(frozen=True)
class BerEstimate:
    """Bit counts, point estimate, and Wilson interval for one cell."""

    bits: int
    errors: int
    ber: float
    ci_lo: float
    ci_hi: float
    seed: int
    streams_used: int

    @classmethod
    def from_counts(
        cls, bits: int, errors: int, seed: int, streams_used: int
    ) -> "BerEstimate":
        if errors > bits:
            raise ValueError(f"errors ({errors}) cannot exceed bits ({bits})")
        if bits == 0:
            return cls(0, 0, 0.0, 0.0, 1.0, seed, streams_used)
        lo, hi = wilson_interval(errors, bits, CONFIDENCE)
        return cls(bits, errors, errors / bits, lo, hi, seed, streams_used)

    @classmethod
    def zero(cls) -> "BerEstimate":
        """Identity element for :func:`merge`."""
        return cls(0, 0, 0.0, 0.0, 1.0, 0, 0)


def merge(a: BerEstimate, b: BerEstimate) -> BerEstimate:
    """Pool two partial estimates of the same point (associative, commutative)."""
    if a.bits and b.bits and a.seed != b.seed:
        raise ValueError(
            f"refusing to merge estimates from different seeds ({a.seed}, {b.seed})"
        )
    seed = a.seed if a.bits else b.seed
    return BerEstimate.from_counts(
        a.bits + b.bits, a.errors + b.errors, seed, a.streams_used + b.streams_used
    )


def _chunk_blocks(point: SimPoint) -> int:
    needed = -(-point.max_bits // point.bits_per_block)  # ceil division
    return min(point.chunk_blocks, needed)


def _simulate_chunk(point: SimPoint, chunk_index: int) -> tuple[int, int]:
    """Simulate one chunk; returns (bits, bit_errors).

    Draw order is fixed per scheme: data bits, then channel gains, then
    estimation errors (skipped entirely when beta == 0, where the
    estimates equal the true gains), then noise.
    """
    rng = RngStream(point.seed, chunk_index)
    n = _chunk_blocks(point)
    power = 10.0 ** (point.gamma_db / 10.0)
    imb = ostbc.ImbalanceRatio.from_db(point.r_db)
    model = channel.decompose_model(point.beta)
    amp = math.sqrt(power)

    if point.scheme == "alamouti_2x1":
        tx_bits = rng.bits(2 * point.mod.bits_per_symbol * n)
        syms = ostbc.modulate(tx_bits, point.mod)
        block = ostbc.alamouti_encode(syms[0::2], syms[1::2])
        ch = channel.sample_channel(rng, size=n)
        if point.beta == 0.0:
            est = channel.EstimatedChannelPair(hhat_B=ch.h_B, hhat_R=ch.h_R)
        else:
            est = channel.estimate_channel(rng, ch, model)
        z = channel.sample_awgn(rng, 2 * n)
        y = ostbc.transmit(block, ch, power, imb, (z[0::2], z[1::2]))
        s0t, s1t = ostbc.alamouti_combine(y, est, imb)
        gain = amp * ostbc.effective_gain(est.hhat_B, est.hhat_R, imb)
        rx0 = ostbc.detect(s0t, gain, point.mod)
        rx1 = ostbc.detect(s1t, gain, point.mod)
        per_sym = tx_bits.reshape(2 * n, point.mod.bits_per_symbol)
        errors = int((rx0 != per_sym[0::2].ravel()).sum())
        errors += int((rx1 != per_sym[1::2].ravel()).sum())
        return tx_bits.size, errors

    tx_bits = rng.bits(3 * point.mod.bits_per_symbol * n)
    syms = ostbc.modulate(tx_bits, point.mod)
    code = ostbc.ostbc4_encode(syms[0::3], syms[1::3], syms[2::3])
    h = sample_circular_gaussian(rng, 1.0, size=(4, 2, n))
    if point.beta == 0.0:
        est = h
    else:
        est = h + sample_circular_gaussian(rng, point.beta, size=(4, 2, n))
    noise = sample_circular_gaussian(rng, 1.0, size=(2, 4, n))
    y = ostbc.ostbc4_transmit(code, h, power, imb, noise)
    outputs = ostbc.ostbc4_combine(y, est, imb)
    gain = amp * ostbc.ostbc4_effective_gain(est, imb)
    per_sym = tx_bits.reshape(3 * n, point.mod.bits_per_symbol)
    errors = 0
    for k, s_tilde in enumerate(outputs):
        rx = ostbc.detect(s_tilde, gain, point.mod)
        errors += int((rx != per_sym[k::3].ravel()).sum())
    return tx_bits.size, errors


def run_point(point: SimPoint, workers: int = 1) -> BerEstimate:
    """Estimate the BER of one point with the adaptive stopping rule.

    The stopping chunk is found by scanning cumulative counts in chunk
    order, so the result is identical for every ``workers`` value; extra
    chunks a parallel wave may have computed past the stopping chunk are
    discarded.
    """
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    bits = 0
    errors = 0
    streams = 0

    def done() -> bool:
        return errors >= point.min_errors or bits >= point.max_bits

    if workers == 1:
        while not done():
            b, e = _simulate_chunk(point, streams)
            bits += b
            errors += e
            streams += 1
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            next_chunk = 0
            while not done():
                wave = range(next_chunk, next_chunk + workers)
                results = list(pool.map(lambda k: _simulate_chunk(point, k), wave))
                next_chunk += workers
                for b, e in results:
                    bits += b
                    errors += e
                    streams += 1
                    if done():
                        break
    return BerEstimate.from_counts(bits, errors, point.seed, streams)


def derive_seed(master_seed: int, *fields) -> int:
    """Stable 64-bit seed for one grid cell, mixed from the sweep seed."""
    text = "|".join([str(int(master_seed))] + [repr(f) for f in fields])
    digest = hashlib.blake2b(text.encode("ascii"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class SweepSpec:
    """Grid of points to estimate, plus stopping and seeding parameters."""

    schemes: tuple
    modulations: tuple
    gamma_db: tuple
    r_db: tuple
    beta: tuple
    seed: int
    min_errors: int = DEFAULT_MIN_ERRORS
    max_bits: int = DEFAULT_MAX_BITS
    workers: int = 1
    output_path: str | None = None

    def __post_init__(self):
        for name in ("schemes", "modulations", "gamma_db", "r_db", "beta"):
            values = tuple(getattr(self, name))
            if not values:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, values)
        object.__setattr__(
            self, "gamma_db", tuple(sorted(set(float(g) for g in self.gamma_db)))
        )
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}; expected {SCHEMES}")
        for m in self.modulations:
            ostbc.modulation_by_name(m)


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    modulation: str
    r_db: float
    beta: float
    gamma_db: float
    ber_analytic: float | None
    estimate: BerEstimate


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple


def sweep_cells(spec: SweepSpec):
    """Deduplicated grid cells in deterministic report order."""
    cells = set(
        product(
            spec.schemes,
            (ostbc.modulation_by_name(m).name for m in spec.modulations),
            (float(r) for r in spec.r_db),
            (float(b) for b in spec.beta),
            spec.gamma_db,
        )
    )
    return sorted(cells)


def analytic_ber(scheme: str, mod: ostbc.Modulation, r_db: float, beta: float,
                 gamma_db: float) -> float | None:
    """Closed-form BER where it exists: 2x1 scheme, BPSK/QPSK, beta == 0."""
    if scheme != "alamouti_2x1" or beta != 0.0 or mod.a_constant is None:
        return None
    point = analytic.AnalyticPoint(
        a_sq=mod.a_constant**2,
        r=10.0 ** (r_db / 10.0),
        gamma=10.0 ** (gamma_db / 10.0),
    )
    return analytic.ber_closed_form(point)


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Run every grid cell and pair it with the analytic value where defined."""
    if workers is None:
        workers = spec.workers
    rows = []
    for scheme, mod_name, r_db, beta, gamma_db in sweep_cells(spec):
        mod = ostbc.modulation_by_name(mod_name)
        point = SimPoint(
            scheme=scheme,
            mod=mod,
            gamma_db=gamma_db,
            r_db=r_db,
            beta=beta,
            seed=derive_seed(spec.seed, scheme, mod_name, r_db, beta, gamma_db),
            min_errors=spec.min_errors,
            max_bits=spec.max_bits,
        )
        rows.append(
            SweepRow(
                scheme=scheme,
                modulation=mod_name,
                r_db=r_db,
                beta=beta,
                gamma_db=gamma_db,
                ber_analytic=analytic_ber(scheme, mod, r_db, beta, gamma_db),
                estimate=run_point(point, workers),
            )
        )
    return SweepResult(spec=spec, rows=tuple(rows))
