"""Command-line orchestrator.

Subcommands: fit-illuminants, fit-brightness, estimate-noise,
synthesize, average, render, evaluate.  Results go only to files;
per-item diagnostics go to stderr as single-line JSON records.  Every
command is deterministic for fixed inputs, config, and seed — including
`synthesize --jobs N`, whose scenes are seeded per image index.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dictionaries, metrics, noise, synthesis
from .bayer import Illuminant, average_burst, mean_intensity, normalize
from .isp import render
from .raw_io import RawFormatError, read_png, read_raw, write_png, write_raw


def _diag(stage: str, file: str, message: str) -> None:
    """One structured diagnostic line on stderr."""
    print(json.dumps({"stage": stage, "file": file, "message": message}), file=sys.stderr)


def _raw_files(directory: Path) -> list[Path]:
    return sorted(directory.glob("*.pgm"))


# ---------------------------------------------------------------------------
# Calibration commands

def cmd_fit_illuminants(args) -> int:
    src = Path(args.gray_card_dir)
    regions = json.loads(Path(args.regions_file).read_text())
    files = _raw_files(src)
    if not files:
        _diag("fit-illuminants", str(src), "no .pgm files found")
        return 1
    failures = 0
    points = []
    for path in files:
        try:
            region = regions.get(path.name)
            if region is None:
                raise ValueError("no region entry in regions file")
            illum = dictionaries.measure_gray_card(read_raw(path), tuple(region))
            points.append([illum.r, illum.b])
        except (ValueError, RawFormatError, OSError) as exc:
            _diag("fit-illuminants", path.name, str(exc))
            failures += 1
            if not args.keep_going:
                return 1
    if failures and len(points) < 2:
        return 1
    try:
        model = dictionaries.fit_illuminant_gaussian(points)
    except ValueError as exc:
        _diag("fit-illuminants", str(src), str(exc))
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dictionaries.save_illuminants(model, out_dir / "illuminants.json")
    return 1 if failures else 0


def cmd_fit_brightness(args) -> int:
    src = Path(args.night_dir)
    files = _raw_files(src)
    if not files:
        _diag("fit-brightness", str(src), "no .pgm files found")
        return 1
    failures = 0
    values = []
    for path in files:
        try:
            values.append(mean_intensity(normalize(read_raw(path))))
        except (ValueError, RawFormatError, OSError) as exc:
            _diag("fit-brightness", path.name, str(exc))
            failures += 1
            if not args.keep_going:
                return 1
    if not values:
        return 1
    try:
        if len(values) == 1:
            # A one-image dictionary is legal here: degenerate log-normal
            # with zero spread (fit_brightness itself wants >= 2 points).
            model = dictionaries.BrightnessModel(
                values=np.asarray(values), mu_log=float(np.log(values[0])), sigma_log=0.0
            )
        else:
            model = dictionaries.fit_brightness(values)
    except ValueError as exc:
        _diag("fit-brightness", str(src), str(exc))
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dictionaries.save_brightness(model, out_dir / "brightness.json")
    return 1 if failures else 0


def cmd_estimate_noise(args) -> int:
    entries = json.loads(Path(args.pairs_manifest).read_text())
    if not entries:
        _diag("estimate-noise", str(args.pairs_manifest), "empty pairs manifest")
        return 1
    by_iso: dict[int, list] = {}
    failures = 0
    for entry in entries:
        try:
            noisy = read_raw(entry["noisy"])
            clean = read_raw(entry["clean"])
            if noisy.pixels.shape != clean.pixels.shape:
                raise ValueError(
                    f"pair dimensions differ: {noisy.pixels.shape} vs {clean.pixels.shape}"
                )
            by_iso.setdefault(noisy.meta.iso, []).append((noisy, clean))
        except (ValueError, KeyError, RawFormatError, OSError) as exc:
            _diag("estimate-noise", str(entry.get("noisy", "?")), str(exc))
            failures += 1
            if not args.keep_going:
                return 1
    params = []
    for iso in sorted(by_iso):
        try:
            params.append(noise.estimate_noise_params(by_iso[iso]))
        except ValueError as exc:
            _diag("estimate-noise", f"iso {iso}", str(exc))
            failures += 1
            if not args.keep_going:
                return 1
    if not params:
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    noise.save_noise_params(params, out_dir / "noise_params.json")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# Synthesis

@dataclass
class PipelineConfig:
    """Mirrors the synthesize config file; flags override seed/jobs."""

    illuminants: str
    brightness: str
    noise_params: str
    iso: int | None = None
    seed: int = 0
    jobs: int = 1
    png_compress_level: int = 0
    relight: synthesis.RelightConfig = None  # filled in from_file

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        info = json.loads(Path(path).read_text())
        relight_kwargs = {}
        for key in (
            "n_lights",
            "strength_range",
            "boundary_fraction",
            "sigma_fraction_range",
            "ambient_fraction_range",
        ):
            if key in info:
                value = info[key]
                relight_kwargs[key] = tuple(value) if isinstance(value, list) else value
        return cls(
            illuminants=info["illuminants"],
            brightness=info["brightness"],
            noise_params=info["noise_params"],
            iso=info.get("iso"),
            seed=int(info.get("seed", 0)),
            jobs=int(info.get("jobs", 1)),
            png_compress_level=int(info.get("png_compress_level", 0)),
            relight=synthesis.RelightConfig(**relight_kwargs),
        )


@dataclass
class _SynthContext:
    illum_model: dictionaries.IlluminantModel
    bright_model: dictionaries.BrightnessModel
    relight_cfg: synthesis.RelightConfig
    noise_params: noise.NoiseParams
    out_dir: str
    png_level: int


_WORKER_CTX: _SynthContext | None = None


def _init_synth_worker(ctx: _SynthContext) -> None:
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _synthesize_one(ctx: _SynthContext, path_str: str, seed: int) -> dict:
    path = Path(path_str)
    day = read_raw(path)
    clean, noisy, record = synthesis.synthesize_night(
        day,
        ctx.illum_model,
        ctx.bright_model,
        ctx.relight_cfg,
        ctx.noise_params,
        seed,
        source_name=path.name,
        dtype=np.float32,
    )
    out = Path(ctx.out_dir)
    stem = path.stem
    wb = Illuminant(*record.effective_wb)
    write_raw(clean, out / f"{stem}_night_clean.pgm")
    write_raw(noisy, out / f"{stem}_night_noisy.pgm")
    write_png(render(clean, wb), out / f"{stem}_night_clean.png", ctx.png_level)
    write_png(render(noisy, wb), out / f"{stem}_night_noisy.png", ctx.png_level)
    return synthesis.record_to_dict(record)


def _synth_task(item: tuple[str, int]):
    path_str, seed = item
    try:
        return ("ok", _synthesize_one(_WORKER_CTX, path_str, seed))
    except (ValueError, RawFormatError, OSError) as exc:
        return ("error", f"{Path(path_str).name}: {exc}")


def _select_noise_params(all_params: list, iso: int | None) -> noise.NoiseParams:
    if not all_params:
        raise ValueError("noise_params file holds no entries")
    if iso is None:
        return all_params[0]
    for p in all_params:
        if p.iso == iso:
            return p
    raise ValueError(f"no noise parameters for iso {iso}")


def cmd_synthesize(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.jobs is not None:
        cfg.jobs = args.jobs
    files = _raw_files(Path(args.day_dir))
    if not files:
        _diag("synthesize", str(args.day_dir), "no .pgm files found")
        return 1
    try:
        ctx = _SynthContext(
            illum_model=dictionaries.load_illuminants(cfg.illuminants),
            bright_model=dictionaries.load_brightness(cfg.brightness),
            relight_cfg=cfg.relight,
            noise_params=_select_noise_params(noise.load_noise_params(cfg.noise_params), cfg.iso),
            out_dir=str(args.out),
            png_level=cfg.png_compress_level,
        )
    except (ValueError, OSError, KeyError) as exc:
        _diag("synthesize", str(args.config), str(exc))
        return 1
    Path(args.out).mkdir(parents=True, exist_ok=True)
    items = [(str(p), cfg.seed + i) for i, p in enumerate(files)]

    if cfg.jobs > 1:
        with ProcessPoolExecutor(
            max_workers=cfg.jobs, initializer=_init_synth_worker, initargs=(ctx,)
        ) as pool:
            results = list(pool.map(_synth_task, items))
    else:
        _init_synth_worker(ctx)
        results = [_synth_task(item) for item in items]

    records = []
    failures = 0
    for (status, payload), (path_str, _) in zip(results, items):
        if status == "ok":
            records.append(synthesis.record_from_dict(payload))
        else:
            _diag("synthesize", Path(path_str).name, payload)
            failures += 1
            if not args.keep_going:
                return 1
    synthesis.write_manifest(records, Path(args.out) / "manifest.json")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# Ground truth, rendering, evaluation

def cmd_average(args) -> int:
    files = _raw_files(Path(args.burst_dir))
    if not files:
        _diag("average", str(args.burst_dir), "no .pgm files found")
        return 1
    try:
        merged = average_burst([read_raw(p) for p in files])
    except (ValueError, RawFormatError, OSError) as exc:
        _diag("average", str(args.burst_dir), str(exc))
        return 1
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_raw(merged, out)
    return 0


def cmd_render(args) -> int:
    try:
        raw = read_raw(args.raw)
        wb = Illuminant(*raw.meta.wb_gains) if args.wb_source == "sidecar" else Illuminant(1, 1, 1)
        write_png(render(raw, wb), args.out, args.png_level)
    except (ValueError, RawFormatError, OSError) as exc:
        _diag("render", str(args.raw), str(exc))
        return 1
    return 0


def _sidecar_wb(png_path: Path):
    sidecar = png_path.with_suffix(".json")
    if not sidecar.exists():
        return None
    try:
        wb = json.loads(sidecar.read_text()).get("wb_gains")
        return tuple(float(v) for v in wb) if wb is not None else None
    except (ValueError, OSError):
        return None


def cmd_evaluate(args) -> int:
    pred_dir, gt_dir = Path(args.pred_dir), Path(args.gt_dir)
    report = metrics.MetricsReport()
    pred_files = sorted(pred_dir.glob("*.png"))
    if not pred_files:
        _diag("evaluate", str(pred_dir), "no .png files found")
        return 1
    for pred_path in pred_files:
        gt_path = gt_dir / pred_path.name
        if not gt_path.exists():
            report.skipped.append({"name": pred_path.name, "reason": "missing ground-truth file"})
            continue
        try:
            a = read_png(pred_path)
            b = read_png(gt_path)
            wb_a, wb_b = _sidecar_wb(pred_path), _sidecar_wb(gt_path)
            angular = (
                metrics.angular_error(wb_a, wb_b) if wb_a is not None and wb_b is not None else None
            )
            report.rows.append(
                metrics.EvalRow(
                    name=pred_path.name,
                    psnr_db=metrics.psnr(a, b),
                    ssim=metrics.ssim(a, b),
                    delta_e=metrics.delta_e(a, b, formula=args.delta_e),
                    angular_error_deg=angular,
                )
            )
        except (ValueError, OSError) as exc:
            report.skipped.append({"name": pred_path.name, "reason": str(exc)})
    for gt_path in sorted(gt_dir.glob("*.png")):
        if not (pred_dir / gt_path.name).exists():
            report.skipped.append({"name": gt_path.name, "reason": "missing prediction file"})
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics.write_report(report, out_dir / "report.json", out_dir / "report.csv")
    return 1 if report.skipped else 0


# ---------------------------------------------------------------------------
# Parser

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nightsynth",
        description="Day-to-night raw synthesis, calibration, rendering, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-illuminants", help="fit the illuminant dictionary from gray cards")
    p.add_argument("gray_card_dir")
    p.add_argument("regions_file", help="JSON mapping <file>.pgm to [x0, y0, x1, y1]")
    p.add_argument("--out", required=True)
    p.add_argument("--keep-going", action="store_true")
    p.set_defaults(func=cmd_fit_illuminants)

    p = sub.add_parser("fit-brightness", help="fit the brightness dictionary from night raws")
    p.add_argument("night_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--keep-going", action="store_true")
    p.set_defaults(func=cmd_fit_brightness)

    p = sub.add_parser("estimate-noise", help="calibrate noise from noisy/clean pairs")
    p.add_argument("pairs_manifest", help='JSON array of {"noisy": path, "clean": path}')
    p.add_argument("--out", required=True)
    p.add_argument("--keep-going", action="store_true")
    p.set_defaults(func=cmd_estimate_noise)

    p = sub.add_parser("synthesize", help="turn day raws into clean/noisy night pairs")
    p.add_argument("day_dir")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--keep-going", action="store_true")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("average", help="average a burst of raw frames")
    p.add_argument("burst_dir")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_average)

    p = sub.add_parser("render", help="render one raw to PNG")
    p.add_argument("raw")
    p.add_argument("--out", required=True)
    p.add_argument("--wb-source", choices=("sidecar", "unity"), default="sidecar")
    p.add_argument("--png-level", type=int, default=6)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("evaluate", help="image-quality report over paired render dirs")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--delta-e", choices=("cie76", "ciede2000"), default="cie76")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
