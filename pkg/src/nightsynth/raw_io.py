"""Raw image container I/O.

A raw capture is stored as two adjacent files: a 16-bit binary PGM
(``P5``, maxval 65535, most-significant byte first) holding the Bayer
mosaic, and a ``<stem>.json`` sidecar holding the capture metadata.
sRGB renders are exported as 8-bit RGB PNG.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CFA_PATTERNS = ("RGGB", "BGGR", "GRBG", "GBRG")

PGM_MAXVAL = 65535


class RawFormatError(ValueError):
    """Raised when a raw file or its sidecar violates the container contract."""


@dataclass(frozen=True)
class RawMeta:
    """Capture metadata carried alongside the pixel plane.

    ``wb_gains`` holds the scene illuminant as an (r, g, b) triple in
    sensor response units, normalized so g == 1 on load.  ``ccm`` is an
    optional raw->linear-sRGB color matrix stored as 9 row-major floats;
    its rows must each sum to 1 (white-point preserving).
    """

    cfa_pattern: str
    black_level: int
    white_level: int
    wb_gains: tuple[float, float, float] = (1.0, 1.0, 1.0)
    iso: int = 100
    exposure_time: float = 0.0
    ccm: tuple[float, ...] | None = None

    def validate(self) -> None:
        if self.cfa_pattern not in CFA_PATTERNS:
            raise RawFormatError(f"unknown cfa_pattern {self.cfa_pattern!r}")
        if not self.black_level < self.white_level:
            raise RawFormatError(
                f"black_level {self.black_level} must be < white_level {self.white_level}"
            )
        if min(self.wb_gains) <= 0:
            raise RawFormatError(f"wb_gains must be positive, got {self.wb_gains}")
        if self.ccm is not None:
            m = np.asarray(self.ccm, dtype=np.float64)
            if m.shape != (9,):
                raise RawFormatError("ccm must hold 9 row-major numbers")
            sums = m.reshape(3, 3).sum(axis=1)
            if np.any(np.abs(sums - 1.0) > 1e-6):
                raise RawFormatError(f"ccm rows must sum to 1 +- 1e-6, got sums {sums.tolist()}")


@dataclass
class RawImage:
    """A single-plane 16-bit Bayer mosaic plus its metadata."""

    pixels: np.ndarray  # (H, W) uint16
    meta: RawMeta

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def validate(self) -> None:
        self.meta.validate()
        if self.pixels.ndim != 2:
            raise RawFormatError("pixel plane must be 2-D")
        if self.pixels.dtype != np.uint16:
            raise RawFormatError(f"pixel plane must be uint16, got {self.pixels.dtype}")
        h, w = self.pixels.shape
        if h % 2 or w % 2:
            raise RawFormatError(f"dimensions must be even, got {w}x{h}")
        if self.pixels.size and int(self.pixels.max()) > self.meta.white_level:
            flat = int(np.argmax(self.pixels > self.meta.white_level))
            y, x = divmod(flat, w)
            raise RawFormatError(
                f"pixel ({x}, {y}) = {int(self.pixels[y, x])} exceeds "
                f"white_level {self.meta.white_level}"
            )


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    """Write-temp-then-rename so readers never observe a partial file."""
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def atomic_write_text(path, text: str) -> None:
    """Atomically replace ``path`` with ``text`` (UTF-8)."""
    _atomic_write_bytes(Path(path), text.encode("utf-8"))


def _sidecar_path(pgm_path: Path) -> Path:
    return pgm_path.with_suffix(".json")


def _normalize_illuminant(wb) -> tuple[float, float, float]:
    r, g, b = (float(v) for v in wb)
    if min(r, g, b) <= 0:
        raise RawFormatError(f"wb_gains must be positive, got {wb}")
    return (r / g, 1.0, b / g)


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if not data.startswith(b"P5"):
        raise RawFormatError(f"{path}: not a binary PGM (magic != P5)")
    # Header = magic + 3 whitespace-separated integers, '#' comments allowed.
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise RawFormatError(f"{path}: truncated PGM header")
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace byte separates header from payload
    width, height, maxval = fields
    if maxval != PGM_MAXVAL:
        raise RawFormatError(f"{path}: maxval must be {PGM_MAXVAL}, got {maxval}")
    if width % 2 or height % 2:
        raise RawFormatError(f"{path}: dimensions must be even, got {width}x{height}")
    expected = width * height * 2
    payload = data[pos : pos + expected]
    if len(payload) != expected:
        raise RawFormatError(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    pixels = np.frombuffer(payload, dtype=">u2").reshape(height, width)
    return pixels.astype(np.uint16)


def read_raw(path) -> RawImage:
    """Read a PGM + sidecar pair into a RawImage.

    The sidecar's illuminant is renormalized so its green component is 1.
    Pixels above the sidecar's white level are rejected with a diagnostic
    naming the offending coordinate.
    """
    path = Path(path)
    pixels = _read_pgm(path)
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        raise RawFormatError(f"missing sidecar {sidecar}")
    info = json.loads(sidecar.read_text())
    for key in ("width", "height", "cfa_pattern", "black_level", "white_level", "wb_gains"):
        if key not in info:
            raise RawFormatError(f"{sidecar}: missing field {key!r}")
    if (info["width"], info["height"]) != (pixels.shape[1], pixels.shape[0]):
        raise RawFormatError(
            f"{sidecar}: dimensions {info['width']}x{info['height']} disagree with "
            f"pixel plane {pixels.shape[1]}x{pixels.shape[0]}"
        )
    ccm = info.get("ccm")
    meta = RawMeta(
        cfa_pattern=str(info["cfa_pattern"]),
        black_level=int(info["black_level"]),
        white_level=int(info["white_level"]),
        wb_gains=_normalize_illuminant(info["wb_gains"]),
        iso=int(info.get("iso", 100)),
        exposure_time=float(info.get("exposure_time", 0.0)),
        ccm=tuple(float(v) for v in ccm) if ccm is not None else None,
    )
    image = RawImage(pixels=pixels, meta=meta)
    image.validate()
    return image


def write_raw(image: RawImage, path) -> None:
    """Write a RawImage as PGM + sidecar; read_raw inverts it bit-exactly."""
    image.validate()
    path = Path(path)
    header = f"P5\n{image.width} {image.height}\n{PGM_MAXVAL}\n".encode("ascii")
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(image.pixels.astype(">u2").data)
    os.replace(tmp, path)
    meta = image.meta
    info = {
        "width": image.width,
        "height": image.height,
        "cfa_pattern": meta.cfa_pattern,
        "black_level": meta.black_level,
        "white_level": meta.white_level,
        "wb_gains": list(meta.wb_gains),
        "iso": meta.iso,
        "exposure_time": meta.exposure_time,
    }
    if meta.ccm is not None:
        info["ccm"] = list(meta.ccm)
    _atomic_write_bytes(_sidecar_path(path), (json.dumps(info, indent=2) + "\n").encode("ascii"))


# ---------------------------------------------------------------------------
# PNG export

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _write_chunk(fh, kind: bytes, payload: bytes) -> None:
    crc = zlib.crc32(payload, zlib.crc32(kind))
    fh.write(struct.pack(">I", len(payload)))
    fh.write(kind)
    fh.write(payload)
    fh.write(struct.pack(">I", crc))


def write_png(rgb: np.ndarray, path, compress_level: int = 0) -> None:
    """Write an (H, W, 3) uint8 array as an 8-bit RGB PNG.

    Encoded with per-row filter 0; ``compress_level`` is passed to zlib.
    The default of 0 (stored blocks) trades file size for speed, which is
    what batch preview generation wants; pass 6 for archival output.
    """
    rgb = np.ascontiguousarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError(f"expected (H, W, 3) uint8 array, got {rgb.shape} {rgb.dtype}")
    h, w = rgb.shape[:2]
    if h == 0 or w == 0:
        raise ValueError("cannot encode empty image")
    # One filter-type byte (0 = None) in front of each scanline.
    scanlines = np.empty((h, 1 + w * 3), dtype=np.uint8)
    scanlines[:, 0] = 0
    scanlines[:, 1:] = rgb.reshape(h, w * 3)
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    idat = zlib.compress(scanlines.data, compress_level)
    # Stream the chunks straight to the temp file; materializing the whole
    # payload would copy the (large) IDAT twice more.
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_PNG_SIGNATURE)
        _write_chunk(fh, b"IHDR", ihdr)
        _write_chunk(fh, b"IDAT", idat)
        _write_chunk(fh, b"IEND", b"")
    os.replace(tmp, target)


def read_png(path) -> np.ndarray:
    """Decode a PNG into an (H, W, 3) uint8 array."""
    from PIL import Image

    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


__all__ = [
    "CFA_PATTERNS",
    "RawFormatError",
    "RawMeta",
    "RawImage",
    "read_raw",
    "write_raw",
    "write_png",
    "read_png",
    "atomic_write_text",
]
