"""
The seven subcommands, end to end
=================================

Builds a throwaway workspace and walks the whole command-line pipeline:
calibrate dictionaries from reference captures, estimate noise, batch
synthesize, average a burst, render, evaluate.  Runs in-process through
nightsynth.cli.main; the installed `nightsynth` console script takes the
same arguments.
"""

import json
import shutil
from pathlib import Path

import numpy as np

from nightsynth import NoiseParams, RawImage, RawMeta, add_noise, write_raw
from nightsynth.cli import main

root = Path(__file__).parent / "out" / "cli_tour"
if root.exists():
    shutil.rmtree(root)
root.mkdir(parents=True)
work = root / "work"
work.mkdir()


def run(argv):
    print("$ nightsynth " + " ".join(argv))
    rc = main(argv)
    if rc:
        print("  -> exit code", rc)


def gray_card(illum, brightness=0.4):
    mosaic = np.full((16, 16), brightness)
    mosaic[0::2, 0::2] *= illum[0]
    mosaic[1::2, 1::2] *= illum[2]
    meta = RawMeta(cfa_pattern="RGGB", black_level=0, white_level=1000)
    return RawImage(np.rint(mosaic * 1000).astype(np.uint16), meta)


# 1. fit-illuminants: gray cards shot under the lights to characterize,
#    with a JSON file giving each card's region.
cards = root / "cards"
cards.mkdir()
for i, illum in enumerate([(0.9, 1.0, 0.45), (1.1, 1.0, 0.38), (0.8, 1.0, 0.55)]):
    write_raw(gray_card(illum), cards / f"card{i}.pgm")
regions = root / "regions.json"
regions.write_text(json.dumps({f"card{i}.pgm": [0, 0, 16, 16] for i in range(3)}))
run(["fit-illuminants", str(cards), str(regions), "--out", str(work)])

# 2. fit-brightness: dim reference captures; each contributes its mean
#    normalized intensity.
night = root / "night"
night.mkdir()
rng = np.random.default_rng(3)
for i, level in enumerate([0.03, 0.05, 0.08]):
    meta = RawMeta(cfa_pattern="RGGB", black_level=64, white_level=1023)
    dn = np.rint(64 + level * 959 + rng.normal(0, 2, (32, 32))).astype(np.uint16)
    write_raw(RawImage(dn, meta), night / f"night{i}.pgm")
run(["fit-brightness", str(night), "--out", str(work)])

# 3. estimate-noise: aligned (noisy, clean) pairs listed in a manifest.
pairs_dir = root / "pairs"
pairs_dir.mkdir()
meta = RawMeta(cfa_pattern="RGGB", black_level=512, white_level=65535, iso=1600)
ramp = np.rint(np.linspace(512, 65535, 256 * 256)).reshape(256, 256).astype(np.uint16)
clean = RawImage(ramp, meta)
true_noise = NoiseParams(iso=1600, beta1=0.01, beta2=2e-4)
entries = []
for i in range(3):
    write_raw(clean, pairs_dir / f"clean{i}.pgm")
    write_raw(add_noise(clean, true_noise, rng), pairs_dir / f"noisy{i}.pgm")
    entries.append({"noisy": str(pairs_dir / f"noisy{i}.pgm"),
                    "clean": str(pairs_dir / f"clean{i}.pgm")})
manifest = root / "pairs.json"
manifest.write_text(json.dumps(entries))
run(["estimate-noise", str(manifest), "--out", str(work)])
print("  dictionaries:", sorted(p.name for p in work.iterdir()))

# 4. synthesize: day captures in, aligned night pairs + previews out.
days = root / "days"
days.mkdir()
for i in range(2):
    yy, xx = np.mgrid[0:64, 0:96]
    scene = 0.2 + 0.6 * (xx / 96)
    mosaic = scene.copy()
    mosaic[0::2, 0::2] *= 0.62
    mosaic[1::2, 1::2] *= 0.71
    meta = RawMeta(cfa_pattern="RGGB", black_level=64, white_level=1023,
                   wb_gains=(0.62, 1.0, 0.71))
    write_raw(RawImage(np.rint(64 + mosaic * 959).astype(np.uint16), meta),
              days / f"day{i}.pgm")
config = root / "config.json"
config.write_text(json.dumps({
    "illuminants": str(work / "illuminants.json"),
    "brightness": str(work / "brightness.json"),
    "noise_params": str(work / "noise_params.json"),
    "seed": 5,
    "n_lights": [3, 5],
}))
synth = root / "synth"
run(["synthesize", str(days), "--config", str(config), "--out", str(synth)])
print("  outputs:", sorted(p.name for p in synth.iterdir())[:5], "...")

# 5. average: burst mean as a ground-truth proxy.
burst = root / "burst"
burst.mkdir()
for i in range(8):
    write_raw(add_noise(clean, true_noise, rng), burst / f"frame{i}.pgm")
run(["average", str(burst), "--out", str(root / "burst_mean.pgm")])

# 6. render: raw to sRGB PNG, white balance from the sidecar.
run(["render", str(root / "burst_mean.pgm"), "--out", str(root / "burst_mean.png")])

# 7. evaluate: noisy previews against the clean ones, paired by stem.
pred, gt = root / "pred", root / "gt"
pred.mkdir()
gt.mkdir()
for stem in ("day0", "day1"):
    shutil.copy(synth / f"{stem}_night_noisy.png", pred / f"{stem}.png")
    shutil.copy(synth / f"{stem}_night_clean.png", gt / f"{stem}.png")
run(["evaluate", str(pred), str(gt), "--out", str(root / "eval")])
report = json.loads((root / "eval" / "report.json").read_text())
agg = report["aggregate"]
print(f"  noisy vs clean: psnr {agg['psnr_db']:.2f} dB, ssim {agg['ssim']:.4f}, "
      f"delta_e {agg['delta_e']:.2f}")
