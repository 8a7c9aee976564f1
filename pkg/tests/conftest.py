import numpy as np
import pytest

from nightsynth import RawImage, RawMeta


def make_meta(**overrides) -> RawMeta:
    base = dict(cfa_pattern="RGGB", black_level=64, white_level=1023)
    base.update(overrides)
    return RawMeta(**base)


def make_raw(pixels, **meta_overrides) -> RawImage:
    return RawImage(np.asarray(pixels, dtype=np.uint16), make_meta(**meta_overrides))


def random_raw(rng, h=8, w=8, **meta_overrides) -> RawImage:
    """Uniform random pixels over [black_level, white_level]."""
    meta = make_meta(**meta_overrides)
    pixels = rng.integers(meta.black_level, meta.white_level + 1, size=(h, w), dtype=np.uint16)
    return RawImage(pixels, meta)


def planes_raw(plane_values, h=8, w=8, black_level=0, white_level=10000, cfa="RGGB"):
    """RawImage whose stacked planes are constant at the given normalized values."""
    from nightsynth import unstack_mosaic

    meta = make_meta(cfa_pattern=cfa, black_level=black_level, white_level=white_level)
    scale = white_level - black_level
    planes = np.empty((h // 2, w // 2, 4))
    for i, v in enumerate(plane_values):
        planes[:, :, i] = v * scale + black_level
    mosaic = np.rint(unstack_mosaic(planes, cfa)).astype(np.uint16)
    return RawImage(mosaic, meta)


def ramp_raw(h, w, black_level=8192, white_level=65535, **meta_overrides):
    """Clean raw whose values sweep linearly over the full [b_l, w_l] range."""
    meta = make_meta(black_level=black_level, white_level=white_level, **meta_overrides)
    ramp = np.linspace(black_level, white_level, h * w)
    pixels = np.rint(ramp).astype(np.uint16).reshape(h, w)
    return RawImage(pixels, meta)


def noisy_clean_pairs(params, rng, n_pairs=2, h=1024, w=2048, **ramp_kw):
    """Closed-loop calibration input: add known noise to identical ramps."""
    from nightsynth import add_noise

    clean = ramp_raw(h, w, **ramp_kw)
    return [(add_noise(clean, params, rng), clean) for _ in range(n_pairs)]


def random_lights(rng, n, hw=4, hh=4):
    """Ambient-first light list with positive colors and strengths."""
    from nightsynth import Illuminant
    from nightsynth.synthesis import LightSource

    lights = [
        LightSource(
            color=Illuminant(rng.uniform(0.3, 2.0), 1.0, rng.uniform(0.3, 2.0)),
            strength=float(rng.uniform(0.05, 0.15)),
            is_ambient=True,
        )
    ]
    for _ in range(n - 1):
        lights.append(
            LightSource(
                color=Illuminant(rng.uniform(0.3, 2.0), 1.0, rng.uniform(0.3, 2.0)),
                strength=float(rng.uniform(0.5, 1.5)),
                center=(float(rng.uniform(0, hw - 1)), float(rng.uniform(0, hh - 1))),
                sigmas=(float(rng.uniform(0.5, hw)), float(rng.uniform(0.5, hh))),
            )
        )
    return lights


def gray_for_lstar(lstar):
    """0-255 sRGB gray (float, unquantized) with the requested CIELAB L*."""
    fy = (lstar + 16.0) / 116.0
    delta = 6.0 / 29.0
    g = fy**3 if fy > delta else 3 * delta * delta * (fy - 4.0 / 29.0)
    s = 12.92 * g if g <= 0.0031308 else 1.055 * g ** (1 / 2.4) - 0.055
    return s * 255.0


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
