"""Demosaicing, color matrix, sRGB encoding, and the full render path."""

import numpy as np
import pytest

from nightsynth import Illuminant, apply_ccm, demosaic, gamma_encode, render
from nightsynth.bayer import CFA_OFFSETS

from conftest import make_raw, random_raw
from oracles import demosaic_reference

ALL_CFAS = sorted(CFA_OFFSETS)


def mosaic_from_color(r, g, b, cfa, h=8, w=8):
    """Bayer-sample a spatially constant (r, g, b) scene."""
    mosaic = np.empty((h, w))
    (ry, rx), (g1y, g1x), (g2y, g2x), (by, bx) = CFA_OFFSETS[cfa]
    mosaic[ry::2, rx::2] = r
    mosaic[g1y::2, g1x::2] = g
    mosaic[g2y::2, g2x::2] = g
    mosaic[by::2, bx::2] = b
    return mosaic


class TestDemosaic:
    @pytest.mark.parametrize("cfa", ALL_CFAS)
    def test_constant_mosaic(self, cfa):
        out = demosaic(np.full((6, 6), 0.5), cfa)
        np.testing.assert_allclose(out, 0.5, atol=1e-12)
        assert out.shape == (6, 6, 3)

    @pytest.mark.parametrize("cfa", ALL_CFAS)
    def test_constant_color_scene_reproduced_exactly(self, cfa):
        out = demosaic(mosaic_from_color(0.8, 0.4, 0.2, cfa), cfa)
        np.testing.assert_allclose(out[:, :, 0], 0.8, atol=1e-12)
        np.testing.assert_allclose(out[:, :, 1], 0.4, atol=1e-12)
        np.testing.assert_allclose(out[:, :, 2], 0.2, atol=1e-12)

    def test_gradient_matches_convolution_oracle(self):
        y, x = np.mgrid[0:6, 0:6]
        mosaic = (x + 2 * y) / 16.0
        np.testing.assert_allclose(
            demosaic(mosaic, "RGGB"), demosaic_reference(mosaic, "RGGB"), atol=1e-12
        )

    @pytest.mark.parametrize("cfa", ALL_CFAS)
    def test_random_mosaics_match_oracle(self, cfa, rng):
        for shape in ((6, 6), (8, 10), (12, 6)):
            mosaic = rng.uniform(0, 1, shape)
            np.testing.assert_allclose(
                demosaic(mosaic, cfa), demosaic_reference(mosaic, cfa), atol=1e-12
            )

    def test_native_sites_pass_through(self, rng):
        """Each output channel keeps the measured value at its own sites."""
        mosaic = rng.uniform(0, 1, (8, 8))
        out = demosaic(mosaic, "RGGB")
        np.testing.assert_array_equal(out[0::2, 0::2, 0], mosaic[0::2, 0::2])
        np.testing.assert_array_equal(out[0::2, 1::2, 1], mosaic[0::2, 1::2])
        np.testing.assert_array_equal(out[1::2, 0::2, 1], mosaic[1::2, 0::2])
        np.testing.assert_array_equal(out[1::2, 1::2, 2], mosaic[1::2, 1::2])


class TestApplyCcm:
    def test_identity(self, rng):
        img = rng.uniform(0, 1, (4, 4, 3))
        np.testing.assert_array_equal(apply_ccm(img, np.eye(3)), img)

    def test_row_permutation_swaps_channels(self, rng):
        img = rng.uniform(0, 1, (4, 4, 3))
        perm = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
        out = apply_ccm(img, perm)
        np.testing.assert_allclose(out[:, :, 0], img[:, :, 1], atol=1e-15)
        np.testing.assert_allclose(out[:, :, 1], img[:, :, 2], atol=1e-15)
        np.testing.assert_allclose(out[:, :, 2], img[:, :, 0], atol=1e-15)

    def test_gray_preserved_by_any_row_sum_one_matrix(self, rng):
        m = rng.uniform(-0.3, 1.0, (3, 3))
        m /= m.sum(axis=1, keepdims=True)
        img = np.full((3, 3, 3), 0.47)
        np.testing.assert_allclose(apply_ccm(img, m), 0.47, atol=1e-12)

    def test_negative_output_clamped(self):
        m = np.array([[2.0, -0.5, -0.5], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        img = np.zeros((1, 1, 3))
        img[0, 0] = (0.0, 1.0, 1.0)
        assert apply_ccm(img, m)[0, 0, 0] == 0.0

    def test_bad_row_sum_rejected(self, rng):
        img = rng.uniform(0, 1, (2, 2, 3))
        with pytest.raises(ValueError):
            apply_ccm(img, np.eye(3) * 1.01)


class TestGammaEncode:
    def test_extremes(self):
        img = np.zeros((1, 2, 3))
        img[0, 1] = 1.0
        out = gamma_encode(img)
        assert tuple(out[0, 0]) == (0, 0, 0)
        assert tuple(out[0, 1]) == (255, 255, 255)

    def test_knee_value(self):
        img = np.full((1, 1, 3), 0.0031308)
        # 12.92 * 0.0031308 * 255 = 10.31 -> 10
        assert gamma_encode(img)[0, 0, 0] == 10

    def test_midtone(self):
        img = np.full((1, 1, 3), 0.5)
        assert gamma_encode(img)[0, 0, 0] == 188

    def test_monotone(self):
        ramp = np.linspace(0, 1, 1001).reshape(-1, 1, 1) * np.ones((1, 1, 3))
        out = gamma_encode(ramp)[:, 0, 0].astype(int)
        assert (np.diff(out) >= 0).all()

    def test_uint8_output(self, rng):
        out = gamma_encode(rng.uniform(0, 1, (4, 4, 3)))
        assert out.dtype == np.uint8


class TestRender:
    def test_mid_gray(self):
        raw = make_raw(np.full((8, 8), 500), black_level=0, white_level=1000)
        out = render(raw, Illuminant(1, 1, 1))
        assert out.shape == (8, 8, 3)
        assert (out == 188).all()

    def test_black_input_renders_black(self):
        raw = make_raw(np.full((8, 8), 64), black_level=64, white_level=1023)
        assert (render(raw, Illuminant(1, 1, 1)) == 0).all()

    def test_deterministic(self, rng):
        raw = random_raw(rng, 8, 8)
        wb = Illuminant(0.6, 1.0, 0.45)
        np.testing.assert_array_equal(render(raw, wb), render(raw, wb))

    def test_white_balance_neutralizes_tinted_gray(self):
        """A gray card under a tinted light renders neutral once the wb
        matches the tint."""
        illum = Illuminant(0.5, 1.0, 0.25)
        h = w = 8
        mosaic = np.empty((h, w))
        mosaic[0::2, 0::2] = 400 * illum.r
        mosaic[0::2, 1::2] = 400
        mosaic[1::2, 0::2] = 400
        mosaic[1::2, 1::2] = 400 * illum.b
        raw = make_raw(np.rint(mosaic).astype(np.uint16), black_level=0, white_level=1000)
        out = render(raw, illum)
        assert (out[:, :, 0] == out[:, :, 1]).all()
        assert (out[:, :, 1] == out[:, :, 2]).all()

    def test_ccm_applied_when_present(self, rng):
        perm = (0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0)
        raw = random_raw(rng, 8, 8, black_level=0, white_level=65535)
        with_ccm = random_raw(rng, 8, 8, black_level=0, white_level=65535, ccm=perm)
        with_ccm.pixels = raw.pixels.copy()
        plain = render(raw, Illuminant(1, 1, 1))
        swapped = render(with_ccm, Illuminant(1, 1, 1))
        np.testing.assert_array_equal(swapped[:, :, 0], plain[:, :, 1])

    def test_float64_path_agrees_closely(self, rng):
        raw = random_raw(rng, 16, 16)
        a = render(raw, Illuminant(0.7, 1.0, 0.8), dtype=np.float32).astype(int)
        b = render(raw, Illuminant(0.7, 1.0, 0.8), dtype=np.float64).astype(int)
        assert np.abs(a - b).max() <= 1
