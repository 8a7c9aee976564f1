"""Minimal software ISP: raw mosaic to 8-bit sRGB.

Stages: normalize -> white balance -> bilinear demosaic -> optional
color matrix -> sRGB transfer curve.  Deliberately free of any
photo-finishing (tone mapping, denoising, sharpening) so renders are a
pure, deterministic function of the raw values.
"""

from __future__ import annotations

import numpy as np

from .bayer import CFA_OFFSETS, Illuminant
from .raw_io import RawFormatError, RawImage

# Axis flips (flip_rows, flip_cols) that turn each CFA pattern into
# RGGB; bilinear interpolation commutes with them, so one kernel set
# serves all four patterns.
_CFA_FLIPS = {
    "RGGB": (False, False),
    "BGGR": (True, True),
    "GRBG": (False, True),
    "GBRG": (True, False),
}


def _half(avg_of: list[np.ndarray]) -> np.ndarray:
    out = np.add(avg_of[0], avg_of[1])
    for a in avg_of[2:]:
        out += a
    # 2 or 4 terms, so the reciprocal is exact and this matches division.
    out *= out.dtype.type(1.0 / len(avg_of))
    return out


def _demosaic_rggb(m: np.ndarray) -> np.ndarray:
    """Bilinear demosaic of an RGGB mosaic via half-resolution site planes.

    Border neighbors replicate the nearest same-color site, which is
    identical to renormalizing the bilinear kernel over the in-bounds
    same-color neighbors.
    """
    h, w = m.shape
    r = m[0::2, 0::2]
    g1 = m[0::2, 1::2]
    g2 = m[1::2, 0::2]
    b = m[1::2, 1::2]
    out = np.empty((h, w, 3), dtype=m.dtype)

    # Red: right/down/diagonal neighbors (R sits top-left in the tile).
    rp = np.pad(r, ((0, 1), (0, 1)), mode="edge")
    r_right = rp[:-1, 1:]
    r_down = rp[1:, :-1]
    r_diag = rp[1:, 1:]
    out[0::2, 0::2, 0] = r
    out[0::2, 1::2, 0] = _half([r, r_right])
    out[1::2, 0::2, 0] = _half([r, r_down])
    out[1::2, 1::2, 0] = _half([r, r_right, r_down, r_diag])

    # Blue mirrors red with left/up neighbors (B sits bottom-right).
    bp = np.pad(b, ((1, 0), (1, 0)), mode="edge")
    b_left = bp[1:, :-1]
    b_up = bp[:-1, 1:]
    b_diag = bp[:-1, :-1]
    out[1::2, 1::2, 2] = b
    out[1::2, 0::2, 2] = _half([b, b_left])
    out[0::2, 1::2, 2] = _half([b, b_up])
    out[0::2, 0::2, 2] = _half([b, b_left, b_up, b_diag])

    # Green: 4-neighbor average at R and B sites.
    g2_up = np.pad(g2, ((1, 0), (0, 0)), mode="edge")[:-1, :]
    g1_left = np.pad(g1, ((0, 0), (1, 0)), mode="edge")[:, :-1]
    g1_down = np.pad(g1, ((0, 1), (0, 0)), mode="edge")[1:, :]
    g2_right = np.pad(g2, ((0, 0), (0, 1)), mode="edge")[:, 1:]
    out[0::2, 1::2, 1] = g1
    out[1::2, 0::2, 1] = g2
    out[0::2, 0::2, 1] = _half([g2_up, g2, g1_left, g1])
    out[1::2, 1::2, 1] = _half([g1, g1_down, g2, g2_right])
    return out


def _demosaic_encode_rggb(m: np.ndarray) -> np.ndarray:
    """Fused demosaic + clip + sRGB lookup, interleaving uint8 codes.

    Bit-identical to encoding _demosaic_rggb's output (same averages,
    same clip, same table lookup per element), but each site-class piece
    is encoded while still quarter-resolution and contiguous, so the
    expensive strided channel interleave moves 1-byte codes instead of
    floats and the full-resolution float intermediate never exists.
    """
    h, w = m.shape
    r = m[0::2, 0::2]
    g1 = m[0::2, 1::2]
    g2 = m[1::2, 0::2]
    b = m[1::2, 1::2]
    out = np.empty((h, w, 3), dtype=np.uint8)

    def enc(piece):  # piece is a view into m: clip into a fresh buffer
        return _gamma_lookup(np.clip(piece, 0, 1))

    def enc_tmp(piece):  # piece is a throwaway average: clip in place
        np.clip(piece, 0, 1, out=piece)
        return _gamma_lookup(piece)

    rp = np.pad(r, ((0, 1), (0, 1)), mode="edge")
    r_right = rp[:-1, 1:]
    r_down = rp[1:, :-1]
    r_diag = rp[1:, 1:]
    out[0::2, 0::2, 0] = enc(r)
    out[0::2, 1::2, 0] = enc_tmp(_half([r, r_right]))
    out[1::2, 0::2, 0] = enc_tmp(_half([r, r_down]))
    out[1::2, 1::2, 0] = enc_tmp(_half([r, r_right, r_down, r_diag]))

    bp = np.pad(b, ((1, 0), (1, 0)), mode="edge")
    b_left = bp[1:, :-1]
    b_up = bp[:-1, 1:]
    b_diag = bp[:-1, :-1]
    out[1::2, 1::2, 2] = enc(b)
    out[1::2, 0::2, 2] = enc_tmp(_half([b, b_left]))
    out[0::2, 1::2, 2] = enc_tmp(_half([b, b_up]))
    out[0::2, 0::2, 2] = enc_tmp(_half([b, b_left, b_up, b_diag]))

    g2_up = np.pad(g2, ((1, 0), (0, 0)), mode="edge")[:-1, :]
    g1_left = np.pad(g1, ((0, 0), (1, 0)), mode="edge")[:, :-1]
    g1_down = np.pad(g1, ((0, 1), (0, 0)), mode="edge")[1:, :]
    g2_right = np.pad(g2, ((0, 0), (0, 1)), mode="edge")[:, 1:]
    out[0::2, 1::2, 1] = enc(g1)
    out[1::2, 0::2, 1] = enc(g2)
    out[0::2, 0::2, 1] = enc_tmp(_half([g2_up, g2, g1_left, g1]))
    out[1::2, 1::2, 1] = enc_tmp(_half([g1, g1_down, g2, g2_right]))
    return out


def demosaic(mosaic: np.ndarray, cfa: str) -> np.ndarray:
    """Bilinearly interpolate a normalized mosaic to (H, W, 3) linear RGB."""
    if cfa not in _CFA_FLIPS:
        raise RawFormatError(f"unknown cfa_pattern {cfa!r}")
    if mosaic.ndim != 2 or mosaic.shape[0] % 2 or mosaic.shape[1] % 2:
        raise ValueError(f"mosaic must be 2-D with even dimensions, got {mosaic.shape}")
    flip_rows, flip_cols = _CFA_FLIPS[cfa]
    view = mosaic
    if flip_rows:
        view = view[::-1, :]
    if flip_cols:
        view = view[:, ::-1]
    rgb = _demosaic_rggb(view)
    if flip_rows:
        rgb = rgb[::-1, :, :]
    if flip_cols:
        rgb = rgb[:, ::-1, :]
    return np.ascontiguousarray(rgb)


def apply_ccm(img: np.ndarray, ccm: np.ndarray) -> np.ndarray:
    """Apply a white-point-preserving 3x3 color matrix, clamping at 0."""
    ccm = np.asarray(ccm, dtype=np.float64)
    if ccm.shape != (3, 3):
        raise ValueError(f"ccm must be 3x3, got {ccm.shape}")
    sums = ccm.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        raise ValueError(f"ccm rows must sum to 1 +- 1e-6, got sums {sums.tolist()}")
    h, w = img.shape[:2]
    out = img.reshape(h * w, 3) @ ccm.T.astype(img.dtype)
    np.clip(out, 0, None, out=out)
    return out.reshape(h, w, 3)


_SRGB_KNEE = 0.0031308
_LUT_MAX = 65535
_srgb_lut: np.ndarray | None = None


def _srgb_table() -> np.ndarray:
    global _srgb_lut
    if _srgb_lut is None:
        grid = np.arange(_LUT_MAX + 1, dtype=np.float64) / _LUT_MAX
        curved = 1.055 * np.power(grid, 1 / 2.4) - 0.055
        s = np.where(grid <= _SRGB_KNEE, 12.92 * grid, curved)
        _srgb_lut = np.rint(s * 255.0).astype(np.uint8)
    return _srgb_lut


def _gamma_lookup(a: np.ndarray) -> np.ndarray:
    """Curve lookup for already-clipped float values; scribbles on ``a``."""
    dt = a.dtype.type
    a *= dt(_LUT_MAX)
    a += dt(0.5)  # truncation in the cast below rounds to nearest
    return _srgb_table()[a.astype(np.uint16)]


def gamma_encode(img: np.ndarray) -> np.ndarray:
    """sRGB transfer curve on linear [0, 1] values, quantized to uint8.

    Values outside [0, 1] clamp.  Evaluated through a 65536-entry table
    of the exact curve: the 1/65535 input step never moves the result by
    more than one 8-bit code (the curve's steepest slope is 12.92, about
    a twentieth of a code per table step), and it turns a 36M-element
    pow per frame into a gather.
    """
    dt = img.dtype.type if img.dtype.kind == "f" else np.float64
    return _gamma_lookup(np.clip(img, 0, 1).astype(dt, copy=False))


def render(raw: RawImage, wb: Illuminant, *, dtype=np.float32) -> np.ndarray:
    """Render a raw image to (H, W, 3) uint8 sRGB.

    ``wb`` is the illuminant to divide out (for synthesized scenes, the
    effective white balance carried in the sidecar).  The metadata CCM
    is applied when present, identity otherwise.  float32 precision by
    default: the output is 8-bit, and this path runs per-frame in batch
    synthesis.
    """
    dt = np.dtype(dtype).type
    meta = raw.meta
    b_l, w_l = meta.black_level, meta.white_level
    v = raw.pixels.astype(dt)
    v -= dt(b_l)
    np.clip(v, 0, None, out=v)
    v *= dt(1.0 / (w_l - b_l))
    offsets = CFA_OFFSETS[meta.cfa_pattern]
    for gain, (dy, dx) in zip((wb.r, wb.g, wb.g, wb.b), offsets):
        if gain != 1.0:
            v[dy::2, dx::2] /= dt(gain)
    ccm = None
    if meta.ccm is not None:
        candidate = np.asarray(meta.ccm, dtype=np.float64).reshape(3, 3)
        if not np.array_equal(candidate, np.eye(3)):
            ccm = candidate
    if ccm is None:
        # Common case: fuse demosaic and encode (identical values, far
        # less interleave traffic).  Flip handling mirrors demosaic().
        if v.ndim != 2 or v.shape[0] % 2 or v.shape[1] % 2:
            raise ValueError(f"mosaic must be 2-D with even dimensions, got {v.shape}")
        flip_rows, flip_cols = _CFA_FLIPS[meta.cfa_pattern]
        view = v
        if flip_rows:
            view = view[::-1, :]
        if flip_cols:
            view = view[:, ::-1]
        rgb8 = _demosaic_encode_rggb(view)
        if flip_rows:
            rgb8 = rgb8[::-1, :, :]
        if flip_cols:
            rgb8 = rgb8[:, ::-1, :]
        return np.ascontiguousarray(rgb8)
    rgb = apply_ccm(demosaic(v, meta.cfa_pattern), ccm)
    # Clip in place (>1 overshoot from strong wb gains) and reuse the
    # buffer for the curve lookup; rgb is ours to consume at this point.
    np.clip(rgb, 0, 1, out=rgb)
    return _gamma_lookup(rgb)


__all__ = ["demosaic", "apply_ccm", "gamma_encode", "render"]
