"""Normalized Bayer-domain math on stacked half-resolution planes.

All processing happens on a ``BayerStack``: the (H, W) mosaic rearranged
into four (H/2, W/2) planes in the fixed order R, G1, G2, B, regardless
of the source CFA pattern.  Values are normalized so the black level
maps to 0 and the white level to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .raw_io import RawFormatError, RawImage, RawMeta

# Per-pattern (row, col) offsets of the R, G1, G2, B sites inside the
# 2x2 CFA tile; G1/G2 are the greens in raster order.
CFA_OFFSETS = {
    "RGGB": ((0, 0), (0, 1), (1, 0), (1, 1)),
    "BGGR": ((1, 1), (0, 1), (1, 0), (0, 0)),
    "GRBG": ((0, 1), (0, 0), (1, 1), (1, 0)),
    "GBRG": ((1, 0), (0, 0), (1, 1), (0, 1)),
}


@dataclass(frozen=True)
class Illuminant:
    """Sensor response to a light source, as an (r, g, b) gain triple.

    Canonical form has g == 1; ``normalized()`` rescales any triple into
    that form.
    """

    r: float
    g: float
    b: float

    def __post_init__(self):
        if min(self.r, self.g, self.b) <= 0:
            raise ValueError(f"illuminant components must be positive, got {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r, self.g, self.b)

    def normalized(self) -> "Illuminant":
        return Illuminant(self.r / self.g, 1.0, self.b / self.g)


@dataclass
class BayerStack:
    """Four half-resolution planes (R, G1, G2, B) of normalized values."""

    planes: np.ndarray  # (H/2, W/2, 4) floating point
    cfa: str  # CFA pattern of the source mosaic, for un-stacking

    @property
    def half_height(self) -> int:
        return self.planes.shape[0]

    @property
    def half_width(self) -> int:
        return self.planes.shape[1]

    def copy(self) -> "BayerStack":
        return BayerStack(self.planes.copy(), self.cfa)


def stack_mosaic(mosaic: np.ndarray, cfa: str) -> np.ndarray:
    """Rearrange an (H, W) mosaic into (H/2, W/2, 4) planes ordered R, G1, G2, B."""
    if cfa not in CFA_OFFSETS:
        raise RawFormatError(f"unknown cfa_pattern {cfa!r}")
    h, w = mosaic.shape
    if h % 2 or w % 2:
        raise RawFormatError(f"mosaic dimensions must be even, got {w}x{h}")
    out = np.empty((h // 2, w // 2, 4), dtype=mosaic.dtype)
    for i, (dy, dx) in enumerate(CFA_OFFSETS[cfa]):
        out[:, :, i] = mosaic[dy::2, dx::2]
    return out


def unstack_mosaic(planes: np.ndarray, cfa: str) -> np.ndarray:
    """Inverse of stack_mosaic: scatter the 4 planes back onto an (H, W) mosaic."""
    if cfa not in CFA_OFFSETS:
        raise RawFormatError(f"unknown cfa_pattern {cfa!r}")
    hh, hw = planes.shape[:2]
    out = np.empty((hh * 2, hw * 2), dtype=planes.dtype)
    for i, (dy, dx) in enumerate(CFA_OFFSETS[cfa]):
        out[dy::2, dx::2] = planes[:, :, i]
    return out


def normalize(raw: RawImage, dtype=np.float64) -> BayerStack:
    """Black-subtract and scale a raw image into a [0, 1] BayerStack.

    Each value maps to clamp_low(p - black, 0) / (white - black);
    sub-black pixels (noise undershoot in real captures) clamp to 0.
    ``dtype`` selects the working precision; float32 roughly halves the
    cost for full-sensor batch work.
    """
    b_l = raw.meta.black_level
    scale = 1.0 / (raw.meta.white_level - b_l)
    planes = stack_mosaic(raw.pixels, raw.meta.cfa_pattern).astype(dtype)
    planes -= dtype(b_l)
    np.clip(planes, 0, None, out=planes)
    planes *= dtype(scale)
    return BayerStack(planes, raw.meta.cfa_pattern)


def denormalize(
    stack: BayerStack,
    black_level: int,
    white_level: int,
    meta: RawMeta | None = None,
) -> RawImage:
    """Map normalized values back to digital numbers.

    Values are clamped to [0, 1], scaled to [black, white], rounded to
    nearest, and scattered back to the stack's source CFA layout.  When
    ``meta`` is given it is copied with its CFA and levels forced to the
    arguments; otherwise minimal metadata is fabricated.
    """
    v = np.clip(stack.planes, 0.0, 1.0)
    dn = np.rint(v * (white_level - black_level) + black_level).astype(np.uint16)
    if meta is None:
        meta = RawMeta(cfa_pattern=stack.cfa, black_level=black_level, white_level=white_level)
    else:
        meta = replace(
            meta, cfa_pattern=stack.cfa, black_level=black_level, white_level=white_level
        )
    return RawImage(pixels=unstack_mosaic(dn, stack.cfa), meta=meta)


def _plane_gains(illum: Illuminant) -> np.ndarray:
    return np.array([illum.r, illum.g, illum.g, illum.b])


def white_balance(stack: BayerStack, day_illum: Illuminant) -> BayerStack:
    """Divide the planes by the day illuminant: (R, G1, G2, B) / (r, g, g, b)."""
    gains = _plane_gains(day_illum)
    return BayerStack(stack.planes / gains.astype(stack.planes.dtype), stack.cfa)


def apply_illuminant(stack: BayerStack, illum: Illuminant) -> BayerStack:
    """Multiply the planes by an illuminant: (R, G1, G2, B) * (r, g, g, b)."""
    gains = _plane_gains(illum)
    return BayerStack(stack.planes * gains.astype(stack.planes.dtype), stack.cfa)


def mean_intensity(stack: BayerStack) -> float:
    """Arithmetic mean over all four planes (the brightness value d)."""
    if stack.planes.size == 0:
        raise ValueError("cannot take the mean intensity of an empty stack")
    return float(stack.planes.mean(dtype=np.float64))


def average_burst(frames: list[RawImage]) -> RawImage:
    """Per-pixel mean of a burst in the digital-number domain.

    The sum is accumulated exactly in float64 (integer values, so every
    addition is exact), divided by the frame count, and rounded to
    nearest (ties to even).  Metadata comes from the first frame.  The
    result is therefore bit-identical under any permutation of the
    input list.
    """
    if not frames:
        raise ValueError("average_burst needs at least one frame")
    first = frames[0]
    acc = np.zeros(first.pixels.shape, dtype=np.float64)
    for frame in frames:
        if frame.pixels.shape != first.pixels.shape:
            raise ValueError(
                f"frame dimensions differ: {frame.pixels.shape} vs {first.pixels.shape}"
            )
        m, fm = frame.meta, first.meta
        if (m.cfa_pattern, m.black_level, m.white_level) != (
            fm.cfa_pattern,
            fm.black_level,
            fm.white_level,
        ):
            raise ValueError("burst frames must share CFA pattern and black/white levels")
        acc += frame.pixels
    mean = np.rint(acc / len(frames)).astype(np.uint16)
    return RawImage(pixels=mean, meta=first.meta)


__all__ = [
    "CFA_OFFSETS",
    "Illuminant",
    "BayerStack",
    "stack_mosaic",
    "unstack_mosaic",
    "normalize",
    "denormalize",
    "white_balance",
    "apply_illuminant",
    "mean_intensity",
    "average_burst",
]
