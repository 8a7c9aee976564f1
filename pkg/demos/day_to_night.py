"""
Day capture to synthetic night pair
===================================

Fabricates a small daylight raw, fits the two scene dictionaries from a
handful of reference measurements, and turns the day image into an
aligned (clean, noisy) night pair.  Artifacts land in demos/out/.
"""

from pathlib import Path

import numpy as np

from nightsynth import (
    Illuminant,
    NoiseParams,
    RawImage,
    RawMeta,
    RelightConfig,
    fit_brightness,
    fit_illuminant_gaussian,
    render,
    synthesize_night,
    write_png,
    write_raw,
)

out_dir = Path(__file__).parent / "out" / "day_to_night"
out_dir.mkdir(parents=True, exist_ok=True)

# --- a daylight capture: smooth gradient scene under a warm illuminant.
# The mosaic is built site by site, the way the sensor would see it.
h, w = 256, 384
yy, xx = np.mgrid[0:h, 0:w]
scene = 0.20 + 0.55 * (xx / w) + 0.10 * np.sin(yy / 17.0)
day_light = Illuminant(0.62, 1.0, 0.71)
mosaic = scene.copy()
mosaic[0::2, 0::2] *= day_light.r   # R sites
mosaic[1::2, 1::2] *= day_light.b   # B sites
bl, wl = 64, 1023
meta = RawMeta(
    cfa_pattern="RGGB",
    black_level=bl,
    white_level=wl,
    wb_gains=day_light.as_tuple(),
    iso=100,
)
day = RawImage(np.rint(bl + np.clip(mosaic, 0, 1) * (wl - bl)).astype(np.uint16), meta)
write_raw(day, out_dir / "day.pgm")
print(f"day capture: {day.width}x{day.height}, levels [{bl}, {wl}]")

# --- dictionaries: illuminant colors and scene brightness measured from
# nighttime references.  Chromaticities are (r/g, b/g) pairs.
night_chromas = [
    (0.85, 0.45), (1.10, 0.38), (0.95, 0.52), (0.70, 0.60),
    (1.25, 0.35), (0.90, 0.48), (1.05, 0.42),
]
illum_model = fit_illuminant_gaussian(night_chromas)
bright_model = fit_brightness([0.02, 0.035, 0.05, 0.08])
print("illuminant mean chromaticity:", np.round(illum_model.mu, 3))
print(f"brightness log-mean {bright_model.mu_log:.3f}, log-sd {bright_model.sigma_log:.3f}")

# --- one synthesized scene.  The record carries everything needed to
# replay the pair bit-exactly.
noise = NoiseParams(iso=3200, beta1=0.01, beta2=1e-4)
clean, noisy, record = synthesize_night(
    day, illum_model, bright_model, RelightConfig(), noise, seed=42,
    source_name="day.pgm",
)
n_point = sum(not l.is_ambient for l in record.light_sources)
print(f"sampled scene: {n_point} point lights + ambient, dim factor {record.dim_factor:.3f}")
for l in record.light_sources:
    kind = "ambient" if l.is_ambient else f"at ({l.center[0]:.0f}, {l.center[1]:.0f})"
    print(f"  strength {l.strength:.3f}  color ({l.color.r:.2f}, 1, {l.color.b:.2f})  {kind}")

write_raw(clean, out_dir / "night_clean.pgm")
write_raw(noisy, out_dir / "night_noisy.pgm")

# Previews: the day frame under its own white balance, the night pair
# under the scene's effective white balance.
wb = Illuminant(*record.effective_wb)
write_png(render(day, day_light), out_dir / "day.png", 6)
write_png(render(clean, wb), out_dir / "night_clean.png", 6)
write_png(render(noisy, wb), out_dir / "night_noisy.png", 6)
print("wrote day.png, night_clean.png, night_noisy.png to", out_dir)
