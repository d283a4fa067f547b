import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hopflink.fieldgrid import GridSpec, read_pgm16, sample_plane
from hopflink.hologram import (Encoding, HologramSpec, PhaseMap, arcsinc, blaze_depth,
                               encode_phase, first_order_field, reconstruction_fidelity, sinc,
                               synthesize_hologram, vortex_survival)
from hopflink.modes import ModeSuperposition

TWO_PI = 2 * np.pi


def test_zero_phase_and_zero_intensity_as_printed():
    z = np.zeros((8, 8))
    out = encode_phase(z, z, z, Encoding.AS_PRINTED)
    assert np.all(out == 0)


def test_zero_phase_full_intensity_blazed():
    z = np.zeros((8, 8))
    out = encode_phase(z, np.ones_like(z), z, Encoding.NORMALIZED_BLAZE)
    assert np.all(out == 0)


def test_as_printed_uniform_intensity_factor():
    # sinc^2(1 - pi) with sin(x)/x
    factor = (math.sin(1 - math.pi) / (1 - math.pi)) ** 2
    assert factor == pytest.approx(0.1544, abs=5e-5)
    phase = np.linspace(0, 6, 7)
    out = encode_phase(phase, np.ones(7), np.zeros(7), Encoding.AS_PRINTED)
    assert np.allclose(out, np.mod(phase, TWO_PI) * factor)


def test_blaze_first_order_amplitude():
    inten = np.linspace(0, 1, 41)
    m = blaze_depth(inten)
    assert np.all((m >= 0) & (m <= 1 + 1e-12))
    assert np.allclose(np.abs(sinc(np.pi * (m - 1))), np.sqrt(inten), atol=1e-9)


def test_blaze_first_order_coefficient_numerically():
    # Fourier coefficient of exp(i M (t mod 2pi) + i pi (1 - M)) at frequency 1
    t = np.linspace(0, TWO_PI, 4096, endpoint=False)
    for inten in (0.05, 0.3, 0.8, 1.0):
        m = float(blaze_depth(inten))
        c1 = np.mean(np.exp(1j * (m * t + np.pi * (1 - m))) * np.exp(-1j * t))
        assert abs(c1) == pytest.approx(math.sqrt(inten), abs=1e-3)
        assert abs(c1.imag) < 1e-3


def test_arcsinc_inverts():
    y = np.linspace(-np.pi, 0, 301)
    assert np.allclose(arcsinc(sinc(y)), y, atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (5, 7), elements=st.floats(-50, 50)),
       arrays(float, (5, 7), elements=st.floats(0, 1)),
       st.floats(-100, 100),
       st.sampled_from(list(Encoding)))
def test_encoded_range(phase, inten, shift, enc):
    out = encode_phase(phase, inten, np.full(phase.shape, shift), enc)
    assert np.all((out >= 0) & (out < TWO_PI))


def test_phase_map_validation():
    g = GridSpec(16, 16, 1e-3)
    with pytest.raises(ValueError):
        PhaseMap(g, np.full((16, 16), TWO_PI))
    with pytest.raises(ValueError):
        PhaseMap(g, np.zeros((16, 8)))


def test_zero_cycles_rejected(beam):
    spec = HologramSpec(grating_cycles=0.0, grid=GridSpec(64, 64, 4 * beam.waist_w0))
    pm = synthesize_hologram(ModeSuperposition.single(0, 0, beam), spec)
    with pytest.raises(ValueError, match="grating_cycles"):
        first_order_field(pm, spec, 4 * beam.waist_w0)
    with pytest.raises(ValueError):
        HologramSpec(grating_cycles=-1.0)


def test_gaussian_reconstruction(beam):
    spec = HologramSpec(grid=GridSpec.for_beam(beam))
    assert reconstruction_fidelity(ModeSuperposition.single(0, 0, beam), spec) > 0.95


def test_link_reconstruction(beam, link):
    spec = HologramSpec(grid=GridSpec.for_beam(beam))
    assert reconstruction_fidelity(link, spec) > 0.9


def test_blaze_beats_plain_factor(beam, link):
    g = GridSpec.for_beam(beam)
    blazed = reconstruction_fidelity(link, HologramSpec(grid=g))
    printed = reconstruction_fidelity(link, HologramSpec(grid=g, encoding="as_printed"))
    assert blazed > printed


def test_vortex_survival(beam, link):
    spec = HologramSpec(grid=GridSpec.for_beam(beam))
    recon = first_order_field(synthesize_hologram(link, spec), spec, 4 * beam.waist_w0)
    res = vortex_survival(sample_plane(link, 0.0, spec.grid), recon, 2 * beam.waist_w0)
    assert res["matched"]
    assert res["n_target"] == res["n_reconstructed"] == 4
    assert res["max_offset_cells"] <= 2


def test_exports(beam, tmp_path):
    g = GridSpec(32, 24, 4 * beam.waist_w0)
    pm = synthesize_hologram(ModeSuperposition.single(1, 0, beam),
                             HologramSpec(grating_cycles=8, grid=g))
    pm.to_pgm(tmp_path / "h.pgm")
    img = read_pgm16(tmp_path / "h.pgm")
    assert (tmp_path / "h.pgm").read_bytes().startswith(b"P5\n32 24\n65535\n")
    assert img.shape == (32, 24)
    assert np.array_equal(img, np.floor(pm.values * 65536 / TWO_PI).astype(np.uint16))
    pm.to_csv(tmp_path / "h.csv")
    rows = (tmp_path / "h.csv").read_text().splitlines()
    assert rows[0] == "x_m,y_m,phase_rad"
    assert len(rows) == 32 * 24 + 1
