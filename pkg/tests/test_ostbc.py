import math

import numpy as np
import pytest

from coop_ostbc.channel import ChannelPair, EstimatedChannelPair
from coop_ostbc.numerics import RngStream, sample_circular_gaussian
from coop_ostbc.ostbc import (
    BPSK,
    QAM16,
    QPSK,
    ImbalanceRatio,
    alamouti_combine,
    alamouti_encode,
    detect,
    effective_gain,
    modulate,
    modulation_by_name,
    ostbc4_combine,
    ostbc4_effective_gain,
    ostbc4_encode,
    ostbc4_transmit,
    transmit,
)

ALL_MODS = (BPSK, QPSK, QAM16)


# --- modulation ---------------------------------------------------------------


def test_bpsk_mapping():
    syms = modulate([0, 1], BPSK)
    assert syms[0] == 1.0 + 0.0j
    assert syms[1] == -1.0 + 0.0j


def test_qpsk_gray_table():
    inv = 1.0 / math.sqrt(2.0)
    expected = {
        (0, 0): inv + 1j * inv,
        (0, 1): inv - 1j * inv,
        (1, 0): -inv + 1j * inv,
        (1, 1): -inv - 1j * inv,
    }
    for bits, point in expected.items():
        assert modulate(list(bits), QPSK)[0] == pytest.approx(point, abs=1e-15)


def test_qam16_unit_average_energy():
    # Independent enumeration of the +/-1, +/-3 grid scaled by 1/sqrt(10).
    grid = np.array(
        [complex(i, q) for i in (-3, -1, 1, 3) for q in (-3, -1, 1, 3)]
    ) / math.sqrt(10.0)
    assert np.mean(np.abs(grid) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert np.mean(np.abs(QAM16.points) ** 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("mod", ALL_MODS, ids=lambda m: m.name)
def test_unit_average_energy(mod):
    assert np.mean(np.abs(mod.points) ** 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("mod", ALL_MODS, ids=lambda m: m.name)
def test_gray_labelling_of_nearest_neighbours(mod):
    points = mod.points
    labels = np.arange(points.size)
    for i, p in enumerate(points):
        dist = np.abs(points - p)
        dist[i] = np.inf
        nearest = dist <= dist.min() + 1e-9
        for j in labels[nearest]:
            assert bin(i ^ j).count("1") == 1


def test_modulate_rejects_ragged_bit_count():
    with pytest.raises(ValueError):
        modulate([0, 1, 0], QPSK)


def test_modulation_lookup():
    assert modulation_by_name("qpsk") is QPSK
    with pytest.raises(ValueError):
        modulation_by_name("8PSK")


def test_roundtrip_modulate_detect_all_labels():
    for mod in ALL_MODS:
        n = mod.points.size
        bits = np.array(
            [(i >> k) & 1 for i in range(n) for k in range(mod.bits_per_symbol - 1, -1, -1)],
            dtype=np.uint8,
        )
        syms = modulate(bits, mod)
        assert np.array_equal(detect(syms, 1.0, mod), bits)


# --- imbalance weights --------------------------------------------------------


@pytest.mark.parametrize("r", [0.01, 0.1, 1.0, 3.7, 10.0, 100.0])
def test_power_conservation(r):
    imb = ImbalanceRatio.from_linear(r)
    assert imb.w_B_sq + imb.w_R_sq == 1.0
    assert abs(imb.w_B**2 + imb.w_R**2 - 1.0) < 1e-15


def test_balanced_split_at_zero_db():
    imb = ImbalanceRatio.from_db(0.0)
    assert imb.w_B == pytest.approx(imb.w_R, abs=0)
    assert imb.r == 1.0


def test_imbalance_rejects_non_positive_ratio():
    with pytest.raises(ValueError):
        ImbalanceRatio.from_linear(0.0)
    with pytest.raises(ValueError):
        ImbalanceRatio.from_linear(-2.0)


# --- Alamouti block -----------------------------------------------------------


def test_encode_basis_symbols():
    assert np.array_equal(alamouti_encode(1, 0).codeword, np.array([[1, 0], [0, 1]]))
    assert np.array_equal(alamouti_encode(0, 1).codeword, np.array([[0, -1], [1, 0]]))


def test_encode_rows_orthogonal_hand_case():
    cw = alamouti_encode(1 + 1j, 1 - 1j).codeword
    assert np.vdot(cw[1], cw[0]) == 0


def test_encode_rows_orthogonal_random():
    rng = RngStream(31)
    s0 = sample_circular_gaussian(rng, 1.0, size=500)
    s1 = sample_circular_gaussian(rng, 1.0, size=500)
    cw = alamouti_encode(s0, s1).codeword
    inner = cw[0, 0] * cw[1, 0].conj() + cw[0, 1] * cw[1, 1].conj()
    assert np.max(np.abs(inner)) < 1e-12


def test_encode_column_energy():
    cw = alamouti_encode(2 + 1j, 0.5 - 0.25j).codeword
    e = abs(2 + 1j) ** 2 + abs(0.5 - 0.25j) ** 2
    for t in range(2):
        assert np.sum(np.abs(cw[:, t]) ** 2) == pytest.approx(e, rel=1e-15)


# --- transmit / combine -------------------------------------------------------


def test_transmit_hand_example():
    # Balanced links, unit channels, P = 2, (s0, s1) = (1, 0) gives (1, 1).
    y = transmit(
        alamouti_encode(1.0, 0.0),
        ChannelPair(1.0, 1.0),
        2.0,
        ImbalanceRatio.from_linear(1.0),
        (0.0, 0.0),
    )
    assert y[0] == pytest.approx(1.0, rel=1e-15)
    assert y[1] == pytest.approx(1.0, rel=1e-15)


def test_transmit_dead_relay_reduces_to_single_antenna():
    imb = ImbalanceRatio.from_linear(2.0)
    p = 5.0
    s0, s1 = 0.6 + 0.3j, -0.2 + 0.9j
    y = transmit(alamouti_encode(s0, s1), ChannelPair(1.5 - 0.5j, 0.0), p, imb, (0.0, 0.0))
    scale = math.sqrt(p / (1.0 + imb.r)) * (1.5 - 0.5j)
    assert y[0] == pytest.approx(scale * s0, rel=1e-12)
    assert y[1] == pytest.approx(-scale * np.conj(s1), rel=1e-12)


def test_transmit_zero_power_passes_noise_through():
    noise = (0.3 + 0.1j, -0.2 - 0.7j)
    y = transmit(
        alamouti_encode(1.0, 1.0),
        ChannelPair(1.0, 1.0),
        0.0,
        ImbalanceRatio.from_linear(1.0),
        noise,
    )
    assert y[0] == noise[0]
    assert y[1] == noise[1]


def test_combine_hand_example():
    imb = ImbalanceRatio.from_linear(1.0)
    s0 = (1 + 1j) / math.sqrt(2)
    s1 = (1 - 1j) / math.sqrt(2)
    ch = ChannelPair(1.0, 1.0j)
    y = transmit(alamouti_encode(s0, s1), ch, 1.0, imb, (0.0, 0.0))
    s0t, s1t = alamouti_combine(y, EstimatedChannelPair(ch.h_B, ch.h_R), imb)
    g = effective_gain(ch.h_B, ch.h_R, imb)
    assert g == pytest.approx(1.0, rel=1e-15)
    assert s0t / g == pytest.approx(s0, rel=1e-12)
    assert s1t / g == pytest.approx(s1, rel=1e-12)


def test_combine_zero_estimates_give_zero():
    s0t, s1t = alamouti_combine(
        (1.0 + 2.0j, 3.0 - 1.0j),
        EstimatedChannelPair(0.0, 0.0),
        ImbalanceRatio.from_linear(1.0),
    )
    assert s0t == 0 and s1t == 0


def test_combine_recovers_symbols_with_perfect_csi():
    rng = RngStream(32)
    n = 10_000
    imb = ImbalanceRatio.from_linear(4.2)
    p = 3.0
    s0 = sample_circular_gaussian(rng, 1.0, size=n)
    s1 = sample_circular_gaussian(rng, 1.0, size=n)
    hb = sample_circular_gaussian(rng, 1.0, size=n)
    hr = sample_circular_gaussian(rng, 1.0, size=n)
    ch = ChannelPair(hb, hr)
    y = transmit(alamouti_encode(s0, s1), ch, p, imb, (np.zeros(n), np.zeros(n)))
    s0t, s1t = alamouti_combine(y, EstimatedChannelPair(hb, hr), imb)
    g = math.sqrt(p) * effective_gain(hb, hr, imb)
    assert np.max(np.abs(s0t / g - s0)) < 1e-12
    assert np.max(np.abs(s1t / g - s1)) < 1e-12


def test_combine_is_linear_in_received_vector():
    # The combiner is the fixed matrix applied to [y0, y1*], so it is
    # linear over the reals in y and complex-linear in that product input
    # (a complex scale on raw y cannot commute through the conjugation).
    rng = RngStream(33)
    est = EstimatedChannelPair(
        sample_circular_gaussian(rng, 1.0), sample_circular_gaussian(rng, 1.0)
    )
    imb = ImbalanceRatio.from_linear(0.5)
    y = np.array([0.4 - 0.2j, -1.1 + 0.8j])
    b0, b1 = alamouti_combine(y, est, imb)

    for alpha in (2.5, -0.3):
        a0, a1 = alamouti_combine(alpha * y, est, imb)
        assert a0 == pytest.approx(alpha * b0, rel=1e-12)
        assert a1 == pytest.approx(alpha * b1, rel=1e-12)

    alpha = 1.7 - 2.2j
    a0, a1 = alamouti_combine((alpha * y[0], np.conj(alpha) * y[1]), est, imb)
    assert a0 == pytest.approx(alpha * b0, rel=1e-12)
    assert a1 == pytest.approx(alpha * b1, rel=1e-12)


def test_effective_gain_matches_weighted_branch_sum():
    rng = RngStream(34)
    hb = sample_circular_gaussian(rng, 1.0, size=1000)
    hr = sample_circular_gaussian(rng, 1.0, size=1000)
    for r in (0.2, 1.0, 10.0):
        imb = ImbalanceRatio.from_linear(r)
        expected = np.abs(hb) ** 2 / (1.0 + r) + r * np.abs(hr) ** 2 / (1.0 + r)
        assert np.max(np.abs(effective_gain(hb, hr, imb) - expected)) < 1e-12


# --- detection ----------------------------------------------------------------


def test_detect_bpsk_positive_half_plane():
    assert np.array_equal(detect(0.3 + 0.0j, 1.0, BPSK), np.array([0], dtype=np.uint8))
    assert np.array_equal(detect(-0.3 + 0.0j, 1.0, BPSK), np.array([1], dtype=np.uint8))


def test_detect_tie_breaks_to_smallest_label():
    # The origin is equidistant from every QPSK point.
    assert np.array_equal(detect(0.0j, 1.0, QPSK), np.array([0, 0], dtype=np.uint8))
    # On the positive real axis the tie is between labels 00 and 01.
    assert np.array_equal(detect(0.9 + 0.0j, 1.0, QPSK), np.array([0, 0], dtype=np.uint8))


def test_detect_fixed_points_qam16():
    for i, point in enumerate(QAM16.points):
        bits = detect(point, 1.0, QAM16)
        assert int("".join(map(str, bits)), 2) == i


def test_detect_applies_gain_normalization():
    assert np.array_equal(
        detect(100.0 * QAM16.points[7], 100.0, QAM16),
        detect(QAM16.points[7], 1.0, QAM16),
    )


def test_detect_rejects_non_positive_gain():
    with pytest.raises(ValueError):
        detect(1.0 + 0j, 0.0, BPSK)


@pytest.mark.parametrize("mod", ALL_MODS, ids=lambda m: m.name)
def test_zero_noise_perfect_csi_is_bit_exact_2x1(mod):
    rng = RngStream(35)
    n = 10_000
    imb = ImbalanceRatio.from_db(3.7)
    p = 10.0 ** (12.0 / 10.0)
    bits = rng.bits(2 * mod.bits_per_symbol * n)
    syms = modulate(bits, mod)
    ch = ChannelPair(
        sample_circular_gaussian(rng, 1.0, size=n),
        sample_circular_gaussian(rng, 1.0, size=n),
    )
    y = transmit(alamouti_encode(syms[0::2], syms[1::2]), ch, p, imb, (0.0, 0.0))
    s0t, s1t = alamouti_combine(y, EstimatedChannelPair(ch.h_B, ch.h_R), imb)
    gain = math.sqrt(p) * effective_gain(ch.h_B, ch.h_R, imb)
    per_sym = bits.reshape(2 * n, mod.bits_per_symbol)
    assert np.array_equal(detect(s0t, gain, mod), per_sym[0::2].ravel())
    assert np.array_equal(detect(s1t, gain, mod), per_sym[1::2].ravel())


# --- 4-antenna code -----------------------------------------------------------


def test_ostbc4_basis_codeword_is_orthogonal():
    cw = ostbc4_encode(1.0, 0.0, 0.0)
    gram = cw @ cw.conj().T
    assert np.allclose(gram, np.eye(4), atol=1e-15)


def test_ostbc4_defining_property_random():
    rng = RngStream(36)
    for _ in range(100):
        s = sample_circular_gaussian(rng, 1.0, size=3)
        cw = ostbc4_encode(*s)
        gram = cw @ cw.conj().T
        assert np.allclose(gram, np.sum(np.abs(s) ** 2) * np.eye(4), atol=1e-12)


def test_ostbc4_zero_input_gives_zero_matrix():
    assert np.all(ostbc4_encode(0.0, 0.0, 0.0) == 0)


def test_ostbc4_single_path_gain():
    imb = ImbalanceRatio.from_linear(1.0)
    h = np.zeros((4, 2), dtype=complex)
    h[0, 0] = 1.0
    s = (0.3 + 0.4j, -0.8 + 0.1j, 0.5 - 0.5j)
    y = ostbc4_transmit(ostbc4_encode(*s), h, 1.0, imb, np.zeros((2, 4), complex))
    outs = ostbc4_combine(y, h, imb)
    for k in range(3):
        assert outs[k] == pytest.approx(imb.w_B_sq / 2.0 * s[k], rel=1e-12)


def test_ostbc4_zero_channels_give_zero_output():
    h = np.zeros((4, 2), dtype=complex)
    y = np.zeros((2, 4), dtype=complex)
    outs = ostbc4_combine(y, h, ImbalanceRatio.from_linear(2.0))
    assert all(np.all(o == 0) for o in outs)


def test_ostbc4_dimension_mismatch_raises():
    imb = ImbalanceRatio.from_linear(1.0)
    with pytest.raises(ValueError):
        ostbc4_combine(np.zeros((2, 3), complex), np.zeros((4, 2), complex), imb)
    with pytest.raises(ValueError):
        ostbc4_combine(np.zeros((2, 4), complex), np.zeros((3, 2), complex), imb)
    with pytest.raises(ValueError):
        ostbc4_combine(np.zeros((2, 4), complex), np.zeros((4, 3), complex), imb)


@pytest.mark.parametrize("mod", ALL_MODS, ids=lambda m: m.name)
def test_zero_noise_perfect_csi_is_bit_exact_4x2(mod):
    rng = RngStream(37)
    n = 10_000
    imb = ImbalanceRatio.from_db(-2.5)
    p = 10.0 ** (8.0 / 10.0)
    bits = rng.bits(3 * mod.bits_per_symbol * n)
    syms = modulate(bits, mod)
    h = sample_circular_gaussian(rng, 1.0, size=(4, 2, n))
    y = ostbc4_transmit(
        ostbc4_encode(syms[0::3], syms[1::3], syms[2::3]),
        h,
        p,
        imb,
        np.zeros((2, 4, n), complex),
    )
    outs = ostbc4_combine(y, h, imb)
    gain = math.sqrt(p) * ostbc4_effective_gain(h, imb)
    per_sym = bits.reshape(3 * n, mod.bits_per_symbol)
    for k in range(3):
        assert np.array_equal(detect(outs[k], gain, mod), per_sym[k::3].ravel())


def test_ostbc4_effective_gain_sums_weighted_paths():
    rng = RngStream(38)
    h = sample_circular_gaussian(rng, 1.0, size=(4, 2))
    imb = ImbalanceRatio.from_linear(3.0)
    w_sq = np.array([imb.w_B_sq / 2] * 2 + [imb.w_R_sq / 2] * 2)
    expected = float(np.sum(w_sq[:, None] * np.abs(h) ** 2))
    assert ostbc4_effective_gain(h, imb) == pytest.approx(expected, rel=1e-12)
