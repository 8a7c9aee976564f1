"""Heteroscedastic sensor noise: injection and calibration.

The model is zero-mean Gaussian noise whose variance grows linearly
with normalized intensity, var(v) = beta1*v + beta2 (shot and read
terms).  Injection works in the normalized domain and re-quantizes to
digital numbers; calibration inverts that from aligned noisy/clean
pairs by binned variance regression.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .raw_io import RawImage, atomic_write_text


@dataclass(frozen=True)
class NoiseParams:
    """Per-ISO shot/read noise parameters in normalized-intensity units."""

    iso: int
    beta1: float
    beta2: float

    def __post_init__(self):
        if self.beta1 < 0 or self.beta2 < 0:
            raise ValueError(f"noise parameters must be >= 0, got ({self.beta1}, {self.beta2})")

    def variance_at(self, v: float) -> float:
        """Modeled noise variance at normalized intensity v."""
        return self.beta1 * v + self.beta2


def add_noise(clean: RawImage, params: NoiseParams, rng: np.random.Generator) -> RawImage:
    """Add signal-dependent Gaussian noise to a raw image.

    Per pixel, the normalized value v gains N(0, beta1*v + beta2); the
    result is rounded back to digital numbers and clamped to [0, w_l].
    Sub-black output is allowed down to 0 (real sensors record sub-black
    noise); super-white clips at the white level.  Internally float32:
    plenty for noise whose sigma is many digital numbers, and half the
    memory traffic of float64 on 12MP frames.
    """
    meta = clean.meta
    b_l, w_l = meta.black_level, meta.white_level
    if params.beta1 == 0 and params.beta2 == 0:
        return RawImage(pixels=clean.pixels.copy(), meta=meta)
    scale = np.float32(w_l - b_l)
    base = clean.pixels.astype(np.float32)
    np.maximum(base, np.float32(b_l), out=base)  # clamp_low(p - b_l, 0) + b_l
    # v becomes the per-pixel sigma in DN in place: sqrt(b1*v + b2) * scale.
    v = base - np.float32(b_l)
    v /= scale
    v *= np.float32(params.beta1)
    v += np.float32(params.beta2)
    np.sqrt(v, out=v)
    v *= scale
    noise = rng.standard_normal(base.shape, dtype=np.float32)
    noise *= v
    base += noise
    np.rint(base, out=base)
    np.clip(base, 0, w_l, out=base)
    return RawImage(pixels=base.astype(np.uint16), meta=meta)


def estimate_noise_params(
    pairs,
    *,
    n_bins: int = 64,
    min_bin_count: int = 50,
    max_clipped_fraction: float = 1e-4,
) -> NoiseParams:
    """Recover (beta1, beta2) from aligned (noisy, clean) image pairs.

    Normalized residuals noisy - clean are bucketed by clean intensity
    into ``n_bins`` equal-width bins; per-bin unbiased variances are
    regressed against bin-center intensity, slope -> beta1 and
    intercept -> beta2, both clamped at 0.

    Two guards keep the regression honest on real data:

    * pixels whose noisy value sits at a clip rail (0 or the white
      level) are censored observations and are excluded; bins where the
      railed fraction exceeds ``max_clipped_fraction`` are dropped
      entirely, since their surviving samples are a truncated
      distribution whose variance is biased low;
    * the fit is iteratively reweighted (weights sqrt(n)/fitted
      variance, two passes): the sampling noise of a variance estimate
      scales with the variance itself, so an unweighted fit lets the
      noisiest bright bins drown out the read-noise intercept.

    The ISO label is taken from the first noisy image's metadata.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one (noisy, clean) pair")
    ref_meta = pairs[0][0].meta
    b_l, w_l = ref_meta.black_level, ref_meta.white_level
    scale = float(w_l - b_l)

    n_total = np.zeros(n_bins, dtype=np.int64)
    n_rail = np.zeros(n_bins, dtype=np.int64)
    n_kept = np.zeros(n_bins, dtype=np.int64)
    sum_e = np.zeros(n_bins, dtype=np.float64)
    sum_e2 = np.zeros(n_bins, dtype=np.float64)

    for noisy, clean in pairs:
        if noisy.pixels.shape != clean.pixels.shape:
            raise ValueError(
                f"pair dimensions differ: {noisy.pixels.shape} vs {clean.pixels.shape}"
            )
        for img in (noisy, clean):
            if (img.meta.black_level, img.meta.white_level) != (b_l, w_l):
                raise ValueError("all pairs must share black/white levels")
        noisy_dn = noisy.pixels.ravel()
        clean_dn = clean.pixels.ravel().astype(np.float64)
        v = np.clip(clean_dn - b_l, 0.0, None) / scale
        e = (noisy_dn - clean_dn) / scale
        idx = np.minimum((v * n_bins).astype(np.int64), n_bins - 1)
        railed = (noisy_dn <= 0) | (noisy_dn >= w_l)
        ok = ~railed
        n_total += np.bincount(idx, minlength=n_bins)
        n_rail += np.bincount(idx[railed], minlength=n_bins)
        n_kept += np.bincount(idx[ok], minlength=n_bins)
        sum_e += np.bincount(idx[ok], weights=e[ok], minlength=n_bins)
        sum_e2 += np.bincount(idx[ok], weights=e[ok] ** 2, minlength=n_bins)

    with np.errstate(invalid="ignore", divide="ignore"):
        var = (sum_e2 - sum_e**2 / np.maximum(n_kept, 1)) / np.maximum(n_kept - 1, 1)
        rail_frac = n_rail / np.maximum(n_total, 1)
    usable = (n_kept >= min_bin_count) & (rail_frac <= max_clipped_fraction)
    if usable.sum() < 2:
        raise ValueError(f"only {int(usable.sum())} usable intensity bins; need at least 2")

    x = (np.arange(n_bins) + 0.5)[usable] / n_bins
    y = var[usable]
    n = n_kept[usable].astype(np.float64)
    design = np.column_stack([x, np.ones_like(x)])
    slope, intercept = np.linalg.lstsq(design, y, rcond=None)[0]
    for _ in range(2):
        # Floor keeps the weights finite when every bin variance is 0.
        fitted = np.maximum(slope * x + intercept, 1e-30)
        w = np.sqrt(n) / fitted
        slope, intercept = np.linalg.lstsq(design * w[:, None], y * w, rcond=None)[0]
    return NoiseParams(
        iso=ref_meta.iso, beta1=max(float(slope), 0.0), beta2=max(float(intercept), 0.0)
    )


def save_noise_params(params_list, path) -> None:
    payload = [{"iso": p.iso, "beta1": p.beta1, "beta2": p.beta2} for p in params_list]
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def load_noise_params(path) -> list[NoiseParams]:
    info = json.loads(Path(path).read_text())
    return [
        NoiseParams(iso=int(p["iso"]), beta1=float(p["beta1"]), beta2=float(p["beta2"]))
        for p in info
    ]


__all__ = [
    "NoiseParams",
    "add_noise",
    "estimate_noise_params",
    "save_noise_params",
    "load_noise_params",
]
