"""Array response, quantization, codebook, and pattern tests."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from csbsim.array import (
    UNQUANTIZED,
    ArrayConfig,
    GridIndex,
    array_response,
    beam_gain,
    beam_pattern,
    dft_codeword,
    grid_angle,
    grid_angles,
    nearest_grid_index,
    quantize_phase,
    quantized_beamformer,
    steering_vector,
)


# ---------------------------------------------------------------- config

def test_array_config_validation():
    with pytest.raises(ValueError):
        ArrayConfig(3)
    with pytest.raises(ValueError):
        ArrayConfig(0)
    with pytest.raises(ValueError):
        ArrayConfig(16, 0)
    with pytest.raises(ValueError):
        ArrayConfig(16, -1)
    with pytest.raises(ValueError):
        ArrayConfig(16, 2, 3)
    assert ArrayConfig(16).shape == (16, 16)
    assert ArrayConfig(16, 1, 1).shape == (1, 16)
    assert ArrayConfig(8, None, 4).shape == (4, 8)


# ---------------------------------------------------------------- responses

def test_steering_vector_quarter_turns():
    v = steering_vector(math.asin(0.5), 4)
    assert_allclose(v, [1, -1j, -1, 1j], atol=1e-12)


def test_array_response_is_outer_product_with_unit_modulus():
    v = array_response(0.3, -0.7, 8, 4)
    assert v.shape == (4, 8)
    assert_allclose(np.abs(v), 1.0, atol=1e-14)
    assert_allclose(v, np.outer(steering_vector(-0.7, 4), steering_vector(0.3, 8)), atol=1e-14)


def test_on_grid_response_has_rational_phases():
    # At grid direction (i, j) entry (k, l) is exp(-2 pi j (j k + i l) / n).
    n = 8
    i, j = 2, 1
    v = array_response(grid_angle(i, n), grid_angle(j, n), n)
    k = np.arange(n)[:, None]
    l = np.arange(n)[None, :]
    expected = np.exp(-2j * np.pi * (j * k + i * l) / n)
    assert_allclose(v, expected, atol=1e-12)


def test_grid_angle_signed_halves():
    assert grid_angle(0, 16) == 0.0
    assert grid_angle(4, 16) == pytest.approx(math.asin(0.5))
    assert grid_angle(8, 16) == pytest.approx(math.pi / 2)
    assert grid_angle(15, 16) == pytest.approx(math.asin(-1 / 8))
    assert grid_angle(5, 1) == 0.0


@pytest.mark.parametrize("n", [4, 8, 16])
def test_nearest_grid_index_roundtrip(n):
    for i in range(n):
        for j in range(n):
            theta, phi = grid_angles(GridIndex(i, j), n)
            assert nearest_grid_index(theta, phi, n) == GridIndex(i, j)


def test_nearest_grid_index_ula_pins_elevation():
    g = nearest_grid_index(0.4, 1.2, 16, 1)
    assert g.j == 0


# ---------------------------------------------------------------- quantization

def test_quantize_phase_basic_rounding():
    assert quantize_phase(1.6 * math.pi, 1) == 0.0
    assert quantize_phase(0.6 * math.pi, 1) == pytest.approx(math.pi)
    assert quantize_phase(-0.1, 2) == 0.0
    assert quantize_phase(0.3 * math.pi, 2) == pytest.approx(math.pi / 2)


def test_quantize_phase_ties_go_to_smaller_value():
    # Interior midpoint: tie between 0 and pi resolves to 0.
    assert quantize_phase(math.pi / 2, 1) == 0.0
    # Seam midpoint: tie between pi and 2 pi resolves to the wrapped 0.
    assert quantize_phase(3 * math.pi / 2, 1) == 0.0
    assert quantize_phase(3 * math.pi / 4, 2) == pytest.approx(math.pi / 2)
    assert quantize_phase(7 * math.pi / 4, 2) == 0.0


def test_quantize_phase_array_and_unquantized():
    x = np.array([0.1, 2.0, -0.3])
    assert_allclose(quantize_phase(x, UNQUANTIZED), np.mod(x, 2 * np.pi), atol=1e-15)
    out = quantize_phase(x, 3)
    assert out.shape == x.shape


@given(x=st.floats(-50, 50), q=st.integers(1, 6))
def test_quantize_phase_lands_on_lattice_within_half_step(x, q):
    step = 2 * math.pi / (1 << q)
    y = quantize_phase(x, q)
    assert 0 <= y < 2 * math.pi
    # On the lattice.
    ratio = y / step
    assert abs(ratio - round(ratio)) < 1e-9
    # Within half a step in circular distance.
    d = abs((x - y + math.pi) % (2 * math.pi) - math.pi)
    assert d <= step / 2 + 1e-9


def test_quantized_beamformer_norm_and_zero_rejection():
    rng = np.random.default_rng(3)
    f = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    for q in (1, 2, 3, UNQUANTIZED):
        w = quantized_beamformer(f, q)
        assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-14)
    f[2, 1] = 0
    with pytest.raises(ValueError):
        quantized_beamformer(f, 1)


def test_quantization_idempotent_exactly():
    rng = np.random.default_rng(7)
    f = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    for q in (1, 2, 4):
        once = quantized_beamformer(f, q)
        twice = quantized_beamformer(once, q)
        assert np.array_equal(once, twice)


# ---------------------------------------------------------------- codebook

def test_codeword_unquantized_matches_scaled_response():
    cfg = ArrayConfig(8, UNQUANTIZED)
    g = GridIndex(3, 6)
    theta, phi = grid_angles(g, 8)
    cw = dft_codeword(g, cfg)
    assert_allclose(cw, array_response(theta, phi, 8) / 8.0, atol=1e-12)


@pytest.mark.parametrize("n", [4, 8, 16])
def test_codebook_gram_is_scaled_identity(n):
    # Matched gain sqrt(size) on the diagonal, exact nulls elsewhere.
    cfg = ArrayConfig(n, UNQUANTIZED)
    size = n * n
    resp = np.empty((size, size), dtype=complex)
    cws = np.empty((size, size), dtype=complex)
    for i in range(n):
        for j in range(n):
            g = GridIndex(i, j)
            theta, phi = grid_angles(g, n)
            resp[i * n + j] = array_response(theta, phi, n).ravel()
            cws[i * n + j] = dft_codeword(g, cfg).ravel()
    gram = np.abs(np.conj(cws) @ resp.T)
    assert_allclose(gram, math.sqrt(size) * np.eye(size), atol=1e-9)


def test_codeword_is_read_only_and_cached():
    cfg = ArrayConfig(16, 1)
    a = dft_codeword(GridIndex(2, 5), cfg)
    b = dft_codeword(GridIndex(2, 5), cfg)
    assert a is b
    with pytest.raises(ValueError):
        a[0, 0] = 0


def test_one_bit_codeword_entries_are_real():
    cw = dft_codeword(GridIndex(5, 11), ArrayConfig(16, 1))
    assert_allclose(cw.imag, 0, atol=1e-15)
    assert_allclose(np.abs(cw), 1 / 16, atol=1e-15)


def test_beam_gain_is_conjugate_inner_product():
    rng = np.random.default_rng(11)
    v = rng.normal(size=(4, 8)) + 1j * rng.normal(size=(4, 8))
    f = rng.normal(size=(4, 8)) + 1j * rng.normal(size=(4, 8))
    assert beam_gain(v, f) == pytest.approx(np.sum(v * np.conj(f)))
    with pytest.raises(ValueError):
        beam_gain(v, f[:, :4])


def test_matched_gain_magnitudes():
    # Unquantized matched beam collects the full coherent sum.
    cfg = ArrayConfig(16, UNQUANTIZED)
    g = GridIndex(4, 9)
    theta, phi = grid_angles(g, 16)
    v = array_response(theta, phi, 16)
    assert abs(beam_gain(v, dft_codeword(g, cfg))) == pytest.approx(16.0, abs=1e-10)
    # One-bit quantization loses a 2/pi-ish factor but stays dominant.
    g1 = abs(beam_gain(v, dft_codeword(g, ArrayConfig(16, 1))))
    assert 9.0 < g1 < 16.0


# ---------------------------------------------------------------- patterns

def _deg_grid(step):
    deg = np.arange(-90, 91, step, dtype=float)
    return [(math.radians(t), math.radians(p)) for p in deg for t in deg]


def test_pattern_unquantized_unique_maximum():
    dirs = _deg_grid(2)
    amp = beam_pattern(dft_codeword(GridIndex(-5 % 16, -5 % 16), ArrayConfig(16, UNQUANTIZED)), dirs)
    assert int(np.sum(amp > 1 - 1e-9)) == 1


def test_pattern_one_bit_has_mirror_maximum():
    # A symmetric sampling grid must see the sampled peak twice.
    dirs = _deg_grid(2)
    amp = beam_pattern(dft_codeword(GridIndex(-5 % 16, -5 % 16), ArrayConfig(16, 1)), dirs)
    assert int(np.sum(amp > 1 - 1e-9)) >= 2


def test_pattern_two_bit_sidelobes_between_floors():
    # Genuine 2-bit quantization (grid phases off the lattice) raises the
    # sidelobe peak above the unquantized pattern without creating a second
    # mainlobe.
    dirs = _deg_grid(2)
    g = GridIndex(-5 % 16, -5 % 16)
    amp2 = beam_pattern(dft_codeword(g, ArrayConfig(16, 2)), dirs)
    ampi = beam_pattern(dft_codeword(g, ArrayConfig(16, UNQUANTIZED)), dirs)
    tg = math.degrees(grid_angle(-5 % 16, 16))
    arr = np.degrees(np.array(dirs))
    far = (np.abs(arr[:, 0] - tg) > 8) | (np.abs(arr[:, 1] - tg) > 8)
    psl2 = amp2[far].max()
    psli = ampi[far].max()
    assert psl2 < 0.9
    assert psl2 > psli + 0.05


def test_one_bit_mirror_symmetry_pointwise():
    # Real-entried beamformers cannot distinguish (theta, phi) from its
    # negation; check a batch of arbitrary off-grid directions.
    rng = np.random.default_rng(23)
    cfg = ArrayConfig(16, 1)
    f = dft_codeword(GridIndex(3, 14), cfg)
    for _ in range(50):
        theta = rng.uniform(-math.pi / 2, math.pi / 2)
        phi = rng.uniform(-math.pi / 2, math.pi / 2)
        g_fwd = abs(beam_gain(array_response(theta, phi, 16), f))
        g_mir = abs(beam_gain(array_response(-theta, -phi, 16), f))
        assert g_fwd == pytest.approx(g_mir, abs=1e-12)


def test_mirror_gain_example_at_off_grid_target():
    # 16x16 one-bit beam aimed near (-30, -42) degrees: the gain magnitude
    # at (30, 42) equals the gain magnitude at (-30, -42).
    cfg = ArrayConfig(16, 1)
    tgt = (math.radians(-30), math.radians(-42))
    f = dft_codeword(nearest_grid_index(*tgt, 16), cfg)
    fwd = abs(beam_gain(array_response(*tgt, 16), f))
    mir = abs(beam_gain(array_response(-tgt[0], -tgt[1], 16), f))
    assert fwd > 0
    assert fwd == pytest.approx(mir, abs=1e-12)


def test_beam_pattern_rejects_empty():
    f = dft_codeword(GridIndex(0, 0), ArrayConfig(4, None))
    with pytest.raises(ValueError):
        beam_pattern(f, [])
