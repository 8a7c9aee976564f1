"""Nighttime illuminant and brightness dictionaries.

Illuminants are measured off gray-card captures, reduced to (r/g, b/g)
chromaticities, and summarized by a 2D Gaussian whose covariance uses
the 1/M (biased) divisor.  Brightness values d are summarized by a
Gaussian fit in the log domain, since d is a positive multiplicative
dimming factor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bayer import Illuminant, normalize
from .raw_io import RawImage, atomic_write_text

# Diagonal regularization added to the fitted covariance before
# sampling, so degenerate (rank-deficient) fits still factor.
SIGMA_EPSILON = 1e-9

_MAX_REJECTION_ATTEMPTS = 1000


@dataclass
class IlluminantModel:
    """Measured chromaticity points and their fitted 2D Gaussian."""

    points: np.ndarray  # (M, 2) of (r/g, b/g)
    mu: np.ndarray  # (2,)
    sigma: np.ndarray  # (2, 2), symmetric PSD

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)


@dataclass
class BrightnessModel:
    """Measured mean-brightness values and their log-domain Gaussian fit."""

    values: np.ndarray  # (N,) in (0, 1]
    mu_log: float
    sigma_log: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)


def measure_gray_card(raw: RawImage, region: tuple[int, int, int, int]) -> Illuminant:
    """Recover the scene illuminant from a gray-card region.

    ``region`` is (x0, y0, x1, y1) in full-resolution pixels, half-open.
    Only CFA tiles fully inside the rectangle contribute; at least 2x2
    tiles must fit.  Channel means are taken on normalized values, the
    greens averaged together, and the result scaled so g == 1.
    """
    x0, y0, x1, y1 = region
    h, w = raw.pixels.shape
    if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
        raise ValueError(f"region {region} outside image bounds {w}x{h}")
    # Tile range fully contained in the rectangle, in stacked coordinates.
    tx0, ty0 = (x0 + 1) // 2, (y0 + 1) // 2
    tx1, ty1 = x1 // 2, y1 // 2
    if tx1 - tx0 < 2 or ty1 - ty0 < 2:
        raise ValueError(f"region {region} spans fewer than 2x2 CFA tiles")
    patch = normalize(raw).planes[ty0:ty1, tx0:tx1]
    r, g1, g2, b = (float(patch[:, :, i].mean()) for i in range(4))
    g = 0.5 * (g1 + g2)
    if min(r, g, b) <= 0:
        raise ValueError(f"gray-card channel mean not positive: r={r} g={g} b={b}")
    return Illuminant(r / g, 1.0, b / g)


def fit_illuminant_gaussian(points) -> IlluminantModel:
    """Fit the chromaticity Gaussian: mean plus covariance with divisor M.

    The biased 1/M normalization (not 1/(M-1)) is part of the model
    definition and is relied on by the tests.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (M, 2) chromaticity points, got shape {pts.shape}")
    m = pts.shape[0]
    if m < 2:
        raise ValueError(f"need at least 2 points to fit, got {m}")
    mu = pts.mean(axis=0)
    diff = pts - mu
    sigma = diff.T @ diff / m
    return IlluminantModel(points=pts, mu=mu, sigma=sigma)


def sample_illuminants(
    model: IlluminantModel, n: int, rng: np.random.Generator
) -> list[Illuminant]:
    """Draw n illuminants from N(mu, sigma + eps*I).

    Draws with a nonpositive coordinate are rejected and redrawn (a
    physical illuminant cannot have nonpositive response), with a budget
    of 1000 attempts per sample.
    """
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    cov = model.sigma + SIGMA_EPSILON * np.eye(2)
    chol = np.linalg.cholesky(cov)
    out = []
    for _ in range(n):
        for _ in range(_MAX_REJECTION_ATTEMPTS):
            y = model.mu + chol @ rng.standard_normal(2)
            if y[0] > 0 and y[1] > 0:
                out.append(Illuminant(float(y[0]), 1.0, float(y[1])))
                break
        else:
            raise RuntimeError(
                f"rejection budget exhausted ({_MAX_REJECTION_ATTEMPTS} attempts): "
                f"model mass is almost entirely outside the positive quadrant"
            )
    return out


def fit_brightness(values) -> BrightnessModel:
    """Fit a Gaussian to ln d over the measured brightness values."""
    vals = np.asarray(values, dtype=np.float64).ravel()
    if vals.size < 2:
        raise ValueError(f"need at least 2 brightness values, got {vals.size}")
    if np.any(vals <= 0) or np.any(vals > 1):
        raise ValueError("brightness values must lie in (0, 1]")
    logs = np.log(vals)
    # Population (1/N) spread, mirroring the illuminant fit's divisor.
    return BrightnessModel(values=vals, mu_log=float(logs.mean()), sigma_log=float(logs.std()))


def sample_brightness(model: BrightnessModel, rng: np.random.Generator) -> float:
    """Draw one dimming factor d = exp(N(mu_log, sigma_log^2)), capped at 1."""
    return min(float(np.exp(rng.normal(model.mu_log, model.sigma_log))), 1.0)


# ---------------------------------------------------------------------------
# Dictionary files

def save_illuminants(model: IlluminantModel, path) -> None:
    payload = {
        "points": model.points.tolist(),
        "mu": model.mu.tolist(),
        "sigma": model.sigma.tolist(),
    }
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def load_illuminants(path) -> IlluminantModel:
    info = json.loads(Path(path).read_text())
    return IlluminantModel(points=info["points"], mu=info["mu"], sigma=info["sigma"])


def save_brightness(model: BrightnessModel, path) -> None:
    payload = {
        "values": model.values.tolist(),
        "mu_log": model.mu_log,
        "sigma_log": model.sigma_log,
    }
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def load_brightness(path) -> BrightnessModel:
    info = json.loads(Path(path).read_text())
    return BrightnessModel(
        values=info["values"], mu_log=float(info["mu_log"]), sigma_log=float(info["sigma_log"])
    )


__all__ = [
    "SIGMA_EPSILON",
    "IlluminantModel",
    "BrightnessModel",
    "measure_gray_card",
    "fit_illuminant_gaussian",
    "sample_illuminants",
    "fit_brightness",
    "sample_brightness",
    "save_illuminants",
    "load_illuminants",
    "save_brightness",
    "load_brightness",
]
