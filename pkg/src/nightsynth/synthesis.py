"""Day-to-night synthesis: dimming, light sampling, spatial relighting.

A night scene is modeled as a small set of light sources, each an
illuminant color with a strength and a 2D Gaussian spatial mask, plus
one ambient source whose mask is all ones.  The relit image is the
per-pixel convex combination of illuminant-scaled copies of the dimmed
day image, weighted by strength*mask.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .bayer import (
    BayerStack,
    Illuminant,
    apply_illuminant,
    denormalize,
    normalize,
    white_balance,
)
from .dictionaries import (
    BrightnessModel,
    IlluminantModel,
    sample_brightness,
    sample_illuminants,
)
from .noise import NoiseParams, add_noise
from .raw_io import RawImage, atomic_write_text


@dataclass(frozen=True)
class LightSource:
    """One sampled night light.

    ``center`` and ``sigmas`` are (x, y) in stacked half-resolution
    pixel coordinates and may be fractional.  The ambient source's mask
    is all ones and its center/sigmas are unused (stored as zeros).
    """

    color: Illuminant
    strength: float
    center: tuple[float, float] = (0.0, 0.0)
    sigmas: tuple[float, float] = (0.0, 0.0)
    is_ambient: bool = False

    def __post_init__(self):
        if self.strength <= 0:
            raise ValueError(f"light strength must be positive, got {self.strength}")
        if not self.is_ambient and min(self.sigmas) <= 0:
            raise ValueError(f"mask sigmas must be positive, got {self.sigmas}")


@dataclass(frozen=True)
class RelightConfig:
    """Scene-sampling knobs; the defaults follow the procedural constants.

    ``n_lights`` is an inclusive (min, max) range for the total light
    count including the ambient source, so at least 2 is required (one
    ambient plus one local light).
    """

    n_lights: tuple[int, int] = (5, 7)
    strength_range: tuple[float, float] = (0.5, 1.5)
    boundary_fraction: float = 0.10
    sigma_fraction_range: tuple[float, float] = (0.5, 1.0)
    ambient_fraction_range: tuple[float, float] = (0.05, 0.10)

    def __post_init__(self):
        lo, hi = self.n_lights
        if lo < 2 or hi < lo:
            raise ValueError(f"n_lights range must satisfy 2 <= min <= max, got {self.n_lights}")
        if not 0 <= self.boundary_fraction < 0.5:
            raise ValueError(f"boundary_fraction must be in [0, 0.5), got {self.boundary_fraction}")
        for name in ("strength_range", "sigma_fraction_range", "ambient_fraction_range"):
            a, b = getattr(self, name)
            if not 0 < a <= b:
                raise ValueError(f"{name} must satisfy 0 < min <= max, got {(a, b)}")


@dataclass
class SceneRecord:
    """Everything needed to replay one synthesized scene bit-exactly."""

    source_day_image: str
    seed: int
    dim_factor: float
    light_sources: list[LightSource]
    noise_params_used: NoiseParams
    effective_wb: tuple[float, float, float]


def dim(stack: BayerStack, d: float) -> BayerStack:
    """Scale every value by the global dimming factor d in (0, 1]."""
    if not 0 < d <= 1:
        raise ValueError(f"dimming factor must be in (0, 1], got {d}")
    return BayerStack(stack.planes * stack.planes.dtype.type(d), stack.cfa)


def gaussian_mask(hw: int, hh: int, center, sigmas, dtype=np.float64) -> np.ndarray:
    """Unnormalized separable 2D Gaussian on an (hh, hw) grid, peak 1.

    mask[v, u] = exp(-((u-x)^2 / (2 sx^2) + (v-y)^2 / (2 sy^2))).
    Peak amplitude 1 keeps strengths interpretable: any common mask
    amplitude would cancel in the relighting ratio anyway.
    """
    x, y = center
    sx, sy = sigmas
    if sx <= 0 or sy <= 0:
        raise ValueError(f"sigmas must be positive, got {sigmas}")
    dt = np.dtype(dtype).type
    du = np.arange(hw, dtype=dt) - dt(x)
    dv = np.arange(hh, dtype=dt) - dt(y)
    row = np.exp(-(du * du) / dt(2.0 * sx * sx))
    col = np.exp(-(dv * dv) / dt(2.0 * sy * sy))
    return np.outer(col, row)


def sample_light_sources(
    cfg: RelightConfig,
    model: IlluminantModel,
    hw: int,
    hh: int,
    rng: np.random.Generator,
) -> list[LightSource]:
    """Sample one scene's light sources for an (hh, hw) stacked image.

    Index 0 is the ambient source.  Non-ambient centers fall inside the
    boundary-excluded region, sigmas inside sigma_fraction_range times
    the corresponding stacked dimension, and the ambient strength inside
    ambient_fraction_range times the mean non-ambient strength.  The
    draw order (count, colors, strengths, ambient strength, centers x/y,
    sigmas x/y) is fixed: tests pin sequences against it.
    """
    n = int(rng.integers(cfg.n_lights[0], cfg.n_lights[1] + 1))
    colors = sample_illuminants(model, n, rng)
    strengths = rng.uniform(*cfg.strength_range, size=n - 1)
    ambient_strength = float(rng.uniform(*cfg.ambient_fraction_range)) * float(strengths.mean())
    bx = cfg.boundary_fraction * hw
    by = cfg.boundary_fraction * hh
    xs = rng.uniform(bx, hw - bx, size=n - 1)
    ys = rng.uniform(by, hh - by, size=n - 1)
    sxs = rng.uniform(cfg.sigma_fraction_range[0] * hw, cfg.sigma_fraction_range[1] * hw, size=n - 1)
    sys_ = rng.uniform(cfg.sigma_fraction_range[0] * hh, cfg.sigma_fraction_range[1] * hh, size=n - 1)
    lights = [LightSource(color=colors[0], strength=ambient_strength, is_ambient=True)]
    for i in range(n - 1):
        lights.append(
            LightSource(
                color=colors[i + 1],
                strength=float(strengths[i]),
                center=(float(xs[i]), float(ys[i])),
                sigmas=(float(sxs[i]), float(sys_[i])),
            )
        )
    return lights


def _validate_lights(lights) -> None:
    if not lights:
        raise ValueError("relight needs at least one light source")
    if not lights[0].is_ambient:
        raise ValueError("light list must start with the ambient source")
    if any(l.is_ambient for l in lights[1:]):
        raise ValueError("exactly one ambient source allowed, at index 0")


def relight(stack: BayerStack, lights: list[LightSource]) -> BayerStack:
    """Per-pixel mask-weighted mixture of illuminant-scaled copies.

    out = sum_i(stack * L_i * w_i M_i) / sum_i(w_i M_i), computed per
    channel.  Because each L_i scales a whole plane by a scalar, the
    mixture reduces to one accumulated gain map per color channel.  The
    ambient all-ones mask keeps the denominator strictly positive.
    """
    _validate_lights(lights)
    if len(lights) == 1:
        # With one source the weight cancels against itself, so the
        # mixture degenerates to a pure illuminant application; taking
        # that branch keeps the identity bit-exact instead of merely
        # close (w*c/w is not always c in floating point).
        return apply_illuminant(stack, lights[0].color)
    planes = stack.planes
    dtype = planes.dtype
    hh, hw = planes.shape[:2]
    den = np.zeros((hh, hw), dtype=dtype)
    gain_r = np.zeros((hh, hw), dtype=dtype)
    gain_b = np.zeros((hh, hw), dtype=dtype)
    # Dictionary-sampled colors are normalized to g == 1, in which case
    # the green gain map accumulates exactly den, divides to exactly 1,
    # and the green planes pass through bit-identically -- so skip a
    # third of the accumulation work when every light has unit green.
    unit_green = all(l.color.g == 1.0 for l in lights)
    gain_g = None if unit_green else np.zeros((hh, hw), dtype=dtype)
    scratch = np.empty((hh, hw), dtype=dtype)
    for light in lights:
        c = light.color
        if light.is_ambient:
            wm = dtype.type(light.strength)  # all-ones mask, a scalar add
            den += wm
            gain_r += wm * dtype.type(c.r)
            if gain_g is not None:
                gain_g += wm * dtype.type(c.g)
            gain_b += wm * dtype.type(c.b)
            continue
        wm = gaussian_mask(hw, hh, light.center, light.sigmas, dtype=dtype)
        wm *= dtype.type(light.strength)
        den += wm
        np.multiply(wm, dtype.type(c.r), out=scratch)
        gain_r += scratch
        if gain_g is not None:
            np.multiply(wm, dtype.type(c.g), out=scratch)
            gain_g += scratch
        np.multiply(wm, dtype.type(c.b), out=scratch)
        gain_b += scratch
    assert float(den.min()) > 0, "relight denominator must stay positive"
    gain_r /= den
    gain_b /= den
    out = np.empty_like(planes)
    out[:, :, 0] = planes[:, :, 0] * gain_r
    if gain_g is None:
        out[:, :, 1] = planes[:, :, 1]
        out[:, :, 2] = planes[:, :, 2]
    else:
        gain_g /= den
        out[:, :, 1] = planes[:, :, 1] * gain_g
        out[:, :, 2] = planes[:, :, 2] * gain_g
    out[:, :, 3] = planes[:, :, 3] * gain_b
    return BayerStack(out, stack.cfa)


def effective_wb(lights: list[LightSource]) -> Illuminant:
    """Mean of the scene's light colors, renormalized to g == 1."""
    if not lights:
        raise ValueError("effective_wb needs at least one light")
    r = float(np.mean([l.color.r for l in lights]))
    g = float(np.mean([l.color.g for l in lights]))
    b = float(np.mean([l.color.b for l in lights]))
    return Illuminant(r, g, b).normalized()


def synthesize_night(
    day: RawImage,
    illum_model: IlluminantModel,
    bright_model: BrightnessModel,
    cfg: RelightConfig,
    noise_params: NoiseParams,
    seed: int,
    *,
    source_name: str = "",
    dtype=np.float64,
) -> tuple[RawImage, RawImage, SceneRecord]:
    """Turn a day capture into an aligned (clean, noisy) night pair.

    Pipeline: normalize -> white-balance by the day image's metadata
    illuminant -> dim -> relight -> denormalize, then noise injection on
    the clean result.  Scene sampling and noise draw from two
    independent substreams of ``seed``, so a SceneRecord (which stores
    the sampled scene) replays bit-exactly without the dictionaries —
    see replay_record.  ``dtype`` is the working precision; replay must
    use the same one.
    """
    ss = np.random.SeedSequence(seed)
    sample_seq, noise_seq = ss.spawn(2)
    sample_rng = np.random.default_rng(sample_seq)

    stack = normalize(day, dtype=dtype)
    lights = sample_light_sources(cfg, illum_model, stack.half_width, stack.half_height, sample_rng)
    d = sample_brightness(bright_model, sample_rng)
    record = SceneRecord(
        source_day_image=source_name,
        seed=int(seed),
        dim_factor=d,
        light_sources=lights,
        noise_params_used=noise_params,
        effective_wb=effective_wb(lights).as_tuple(),
    )
    clean, noisy = _run_scene(day, stack, record, np.random.default_rng(noise_seq))
    return clean, noisy, record


def replay_record(
    day: RawImage, record: SceneRecord, *, dtype=np.float64
) -> tuple[RawImage, RawImage]:
    """Reproduce a synthesized pair bit-exactly from its SceneRecord.

    The scene content comes from the record itself; only the noise
    substream is re-derived from the record's seed.
    """
    _, noise_seq = np.random.SeedSequence(record.seed).spawn(2)
    stack = normalize(day, dtype=dtype)
    return _run_scene(day, stack, record, np.random.default_rng(noise_seq))


def _run_scene(
    day: RawImage,
    stack: BayerStack,
    record: SceneRecord,
    noise_rng: np.random.Generator,
) -> tuple[RawImage, RawImage]:
    meta = day.meta
    balanced = white_balance(stack, Illuminant(*meta.wb_gains))
    relit = relight(dim(balanced, record.dim_factor), record.light_sources)
    out_meta = replace(
        meta, wb_gains=tuple(record.effective_wb), iso=record.noise_params_used.iso
    )
    clean = denormalize(relit, meta.black_level, meta.white_level, meta=out_meta)
    noisy = add_noise(clean, record.noise_params_used, noise_rng)
    return clean, noisy


# ---------------------------------------------------------------------------
# Scene manifests

def record_to_dict(record: SceneRecord) -> dict:
    return {
        "source_day_image": record.source_day_image,
        "seed": record.seed,
        "dim_factor": record.dim_factor,
        "light_sources": [
            {
                "color": list(l.color.as_tuple()),
                "strength": l.strength,
                "center": list(l.center),
                "sigmas": list(l.sigmas),
                "is_ambient": l.is_ambient,
            }
            for l in record.light_sources
        ],
        "noise_params_used": {
            "iso": record.noise_params_used.iso,
            "beta1": record.noise_params_used.beta1,
            "beta2": record.noise_params_used.beta2,
        },
        "effective_wb": list(record.effective_wb),
    }


def record_from_dict(info: dict) -> SceneRecord:
    lights = [
        LightSource(
            color=Illuminant(*l["color"]),
            strength=float(l["strength"]),
            center=tuple(float(v) for v in l["center"]),
            sigmas=tuple(float(v) for v in l["sigmas"]),
            is_ambient=bool(l["is_ambient"]),
        )
        for l in info["light_sources"]
    ]
    np_ = info["noise_params_used"]
    return SceneRecord(
        source_day_image=str(info["source_day_image"]),
        seed=int(info["seed"]),
        dim_factor=float(info["dim_factor"]),
        light_sources=lights,
        noise_params_used=NoiseParams(
            iso=int(np_["iso"]), beta1=float(np_["beta1"]), beta2=float(np_["beta2"])
        ),
        effective_wb=tuple(float(v) for v in info["effective_wb"]),
    )


def write_manifest(records: list[SceneRecord], path) -> None:
    """Write scene records as a JSON array (atomically)."""
    payload = json.dumps([record_to_dict(r) for r in records], indent=2) + "\n"
    atomic_write_text(path, payload)


def read_manifest(path) -> list[SceneRecord]:
    return [record_from_dict(info) for info in json.loads(Path(path).read_text())]


__all__ = [
    "LightSource",
    "RelightConfig",
    "SceneRecord",
    "dim",
    "gaussian_mask",
    "sample_light_sources",
    "relight",
    "effective_wb",
    "synthesize_night",
    "replay_record",
    "record_to_dict",
    "record_from_dict",
    "write_manifest",
    "read_manifest",
]
