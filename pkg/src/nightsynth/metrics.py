"""Image-quality and illuminant metrics.

All image metrics take (H, W, 3) RGB arrays in [0, 255]; uint8 is the
normal case, float is accepted so callers can evaluate continuous
values (and tests can place colors between code points).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .bayer import Illuminant
from .raw_io import atomic_write_text

PSNR_CAP_DB = 100.0

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_DYNAMIC_RANGE = 255.0

# sRGB (D65) to XYZ; the white point is the row sums, so RGB grays map
# to exactly neutral Lab.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_WHITE = _SRGB_TO_XYZ.sum(axis=1)


def _as_image_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB over all channels, capped at 100."""
    a, b = _as_image_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(_DYNAMIC_RANGE**2 / mse), PSNR_CAP_DB)


def _bt601_luma(img: np.ndarray) -> np.ndarray:
    return img[:, :, 0] * 0.299 + img[:, :, 1] * 0.587 + img[:, :, 2] * 0.114


def _ssim_window_1d() -> np.ndarray:
    offsets = np.arange(_SSIM_WINDOW) - (_SSIM_WINDOW - 1) / 2
    w = np.exp(-(offsets**2) / (2.0 * _SSIM_SIGMA**2))
    return w / w.sum()


def _windowed_mean(img: np.ndarray, w1d: np.ndarray) -> np.ndarray:
    """Valid-region weighted window means via separable correlation."""
    half = _SSIM_WINDOW // 2
    t = correlate1d(img, w1d, axis=0, mode="constant")
    t = correlate1d(t, w1d, axis=1, mode="constant")
    return t[half:-half, half:-half]


def ssim(a, b) -> float:
    """Single-scale SSIM on BT.601 luma, averaged over valid windows.

    11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03, L=255 — the
    reference constants for 8-bit imagery.
    """
    a, b = _as_image_pair(a, b)
    if min(a.shape[0], a.shape[1]) < _SSIM_WINDOW:
        raise ValueError(f"images must be at least {_SSIM_WINDOW}x{_SSIM_WINDOW} for SSIM")
    x = _bt601_luma(a)
    y = _bt601_luma(b)
    w1d = _ssim_window_1d()
    mu_x = _windowed_mean(x, w1d)
    mu_y = _windowed_mean(y, w1d)
    xx = _windowed_mean(x * x, w1d) - mu_x**2
    yy = _windowed_mean(y * y, w1d) - mu_y**2
    xy = _windowed_mean(x * y, w1d) - mu_x * mu_y
    c1 = (_SSIM_K1 * _DYNAMIC_RANGE) ** 2
    c2 = (_SSIM_K2 * _DYNAMIC_RANGE) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * xy + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (xx + yy + c2)
    return float(np.mean(num / den))


def srgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Convert [0, 255] sRGB to CIELAB (D65)."""
    c = np.asarray(img, dtype=np.float64) / 255.0
    linear = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _SRGB_TO_XYZ.T
    t = xyz / _XYZ_WHITE
    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3.0 * delta**2) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def delta_e(a, b, formula: str = "cie76") -> float:
    """Mean per-pixel CIELAB color difference ("cie76" or "ciede2000")."""
    a, b = _as_image_pair(a, b)
    lab_a = srgb_to_lab(a).reshape(-1, 3)
    lab_b = srgb_to_lab(b).reshape(-1, 3)
    if formula == "cie76":
        per_pixel = np.sqrt(np.sum((lab_a - lab_b) ** 2, axis=1))
    elif formula == "ciede2000":
        per_pixel = ciede2000(lab_a, lab_b)
    else:
        raise ValueError(f"unknown delta-E formula {formula!r}")
    return float(per_pixel.mean())


def ciede2000(lab1: np.ndarray, lab2: np.ndarray) -> np.ndarray:
    """CIEDE2000 color difference between (N, 3) Lab arrays."""
    l1, a1, b1 = lab1[:, 0], lab1[:, 1], lab1[:, 2]
    l2, a2, b2 = lab2[:, 0], lab2[:, 1], lab2[:, 2]
    c_bar = 0.5 * (np.hypot(a1, b1) + np.hypot(a2, b2))
    g = 0.5 * (1.0 - np.sqrt(c_bar**7 / (c_bar**7 + 25.0**7)))
    a1p = (1.0 + g) * a1
    a2p = (1.0 + g) * a2
    c1p = np.hypot(a1p, b1)
    c2p = np.hypot(a2p, b2)
    h1p = np.degrees(np.arctan2(b1, a1p)) % 360.0
    h2p = np.degrees(np.arctan2(b2, a2p)) % 360.0

    dl = l2 - l1
    dc = c2p - c1p
    zero_chroma = (c1p * c2p) == 0.0
    dh = h2p - h1p
    dh = np.where(dh > 180.0, dh - 360.0, dh)
    dh = np.where(dh < -180.0, dh + 360.0, dh)
    dh = np.where(zero_chroma, 0.0, dh)
    dhh = 2.0 * np.sqrt(c1p * c2p) * np.sin(np.radians(dh) / 2.0)

    l_bar = 0.5 * (l1 + l2)
    cp_bar = 0.5 * (c1p + c2p)
    hsum = h1p + h2p
    habs = np.abs(h1p - h2p)
    h_bar = np.where(
        habs <= 180.0,
        0.5 * hsum,
        np.where(hsum < 360.0, 0.5 * (hsum + 360.0), 0.5 * (hsum - 360.0)),
    )
    h_bar = np.where(zero_chroma, hsum, h_bar)

    t = (
        1.0
        - 0.17 * np.cos(np.radians(h_bar - 30.0))
        + 0.24 * np.cos(np.radians(2.0 * h_bar))
        + 0.32 * np.cos(np.radians(3.0 * h_bar + 6.0))
        - 0.20 * np.cos(np.radians(4.0 * h_bar - 63.0))
    )
    d_theta = 30.0 * np.exp(-(((h_bar - 275.0) / 25.0) ** 2))
    rc = 2.0 * np.sqrt(cp_bar**7 / (cp_bar**7 + 25.0**7))
    sl = 1.0 + 0.015 * (l_bar - 50.0) ** 2 / np.sqrt(20.0 + (l_bar - 50.0) ** 2)
    sc = 1.0 + 0.045 * cp_bar
    sh = 1.0 + 0.015 * cp_bar * t
    rt = -np.sin(np.radians(2.0 * d_theta)) * rc
    return np.sqrt(
        (dl / sl) ** 2 + (dc / sc) ** 2 + (dhh / sh) ** 2 + rt * (dc / sc) * (dhh / sh)
    )


def angular_error(w1, w2) -> float:
    """Angle in degrees between two RGB illuminant/white-balance vectors."""
    vecs = []
    for w in (w1, w2):
        if isinstance(w, Illuminant):
            w = w.as_tuple()
        v = np.asarray(w, dtype=np.float64).ravel()
        if v.shape != (3,):
            raise ValueError(f"expected a 3-vector, got shape {v.shape}")
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise ValueError("angular error undefined for a zero vector")
        vecs.append(v / norm)
    # atan2 of (|cross|, dot) instead of arccos(dot): arccos loses ~8
    # digits near parallel vectors, while cross(v, v) is exactly zero.
    cross = float(np.linalg.norm(np.cross(vecs[0], vecs[1])))
    dot = float(np.dot(vecs[0], vecs[1]))
    return float(np.degrees(np.arctan2(cross, dot)))


# ---------------------------------------------------------------------------
# Evaluation reports

@dataclass
class EvalRow:
    name: str
    psnr_db: float
    ssim: float
    delta_e: float
    angular_error_deg: float | None = None


@dataclass
class MetricsReport:
    rows: list[EvalRow] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)

    def aggregate(self) -> dict:
        agg = {
            "count": len(self.rows),
            "skipped": len(self.skipped),
            "psnr_db": None,
            "ssim": None,
            "delta_e": None,
            "angular_error_deg": None,
        }
        if self.rows:
            agg["psnr_db"] = float(np.mean([r.psnr_db for r in self.rows]))
            agg["ssim"] = float(np.mean([r.ssim for r in self.rows]))
            agg["delta_e"] = float(np.mean([r.delta_e for r in self.rows]))
        angles = [r.angular_error_deg for r in self.rows if r.angular_error_deg is not None]
        if angles:
            agg["angular_error_deg"] = float(np.mean(angles))
        return agg


_CSV_FIELDS = ("name", "psnr_db", "ssim", "delta_e", "angular_error_deg")


def write_report(report: MetricsReport, json_path, csv_path) -> None:
    """Emit report.json and report.csv (per-image rows + aggregate footer)."""
    agg = report.aggregate()
    payload = {
        "rows": [vars(r) for r in report.rows],
        "skipped": report.skipped,
        "aggregate": agg,
    }
    atomic_write_text(json_path, json.dumps(payload, indent=2) + "\n")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_FIELDS)
    for r in report.rows:
        writer.writerow([r.name, r.psnr_db, r.ssim, r.delta_e, r.angular_error_deg])
    writer.writerow(
        ["aggregate", agg["psnr_db"], agg["ssim"], agg["delta_e"], agg["angular_error_deg"]]
    )
    atomic_write_text(csv_path, buf.getvalue())


__all__ = [
    "PSNR_CAP_DB",
    "psnr",
    "ssim",
    "srgb_to_lab",
    "delta_e",
    "ciede2000",
    "angular_error",
    "EvalRow",
    "MetricsReport",
    "write_report",
]
