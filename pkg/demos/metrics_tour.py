"""
Image quality metrics and burst averaging
=========================================

PSNR, SSIM, CIELAB delta-E, and white-balance angular error on small
constructed images, then the classic denoising baseline: averaging a
burst of noisy frames and watching PSNR climb.
"""

import numpy as np

from nightsynth import (
    Illuminant,
    NoiseParams,
    RawImage,
    RawMeta,
    add_noise,
    angular_error,
    average_burst,
    delta_e,
    psnr,
    render,
    ssim,
)

rng = np.random.default_rng(99)

# --- the metrics on simple pairs
a = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
b = np.clip(a.astype(int) + rng.integers(-12, 13, a.shape), 0, 255).astype(np.uint8)
print(f"psnr  identical {psnr(a, a):6.2f} dB   perturbed {psnr(a, b):6.2f} dB")
print(f"ssim  identical {ssim(a, a):6.4f}      perturbed {ssim(a, b):6.4f}")
print(f"delta_e cie76 {delta_e(a, b):.3f}   ciede2000 {delta_e(a, b, 'ciede2000'):.3f}")

wb_day = Illuminant(0.62, 1.0, 0.71)
wb_est = Illuminant(0.60, 1.0, 0.75)
print(f"angular error day vs estimate: {angular_error(wb_day, wb_est):.3f} degrees")

# --- burst averaging: N noisy exposures of the same scene
meta = RawMeta(cfa_pattern="RGGB", black_level=512, white_level=16383, iso=1600)
scene = rng.integers(2000, 15000, (128, 128), dtype=np.uint16)
truth = RawImage(scene, meta)
params = NoiseParams(iso=1600, beta1=0.02, beta2=5e-4)
wb = Illuminant(1.0, 1.0, 1.0)
reference = render(truth, wb)

frames = []
print("\nframes   psnr of burst mean vs ground truth")
for n in (1, 2, 4, 8, 16):
    while len(frames) < n:
        frames.append(add_noise(truth, params, rng))
    avg = average_burst(frames)
    print(f"  {n:3d}     {psnr(render(avg, wb), reference):6.2f} dB")
