"""Deterministic synthetic data: 1-D benchmark signals and 2-D thermal scenes.

Scenes are built from a known decomposition (smooth background + Gaussian
blobs + seeded noise) together with the exact truth mask of the blob
footprints, so detection pipelines can be scored against ground truth.
Randomness comes from numpy's PCG64 generator seeded per scene, making
grids bit-reproducible for a fixed spec.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BlobOutOfBounds, DimensionMismatch
from .grid import ScalarGrid
from .segment import LabelMask, _class_means_from

#: A blob pixel belongs to the truth mask when its summed blob
#: contribution exceeds this (degrees Celsius) - far below any contrast
#: considered detectable, so the mask brackets the full footprint.
TRUTH_CONTRIBUTION = 0.1


@dataclass(frozen=True)
class Blob:
    """One Gaussian hot spot: ``peak`` degrees above the local background.

    The profile is peak * exp(-d^2 / (2 * sigma^2)) with sigma = radius/2,
    so the nominal radius covers two standard deviations.
    """

    center_row: float
    center_col: float
    radius: float
    peak: float

    @property
    def sigma(self) -> float:
        return self.radius / 2.0


@dataclass(frozen=True)
class RectROI:
    """Axis-aligned region of interest: rows [top, top+height) etc."""

    top: int
    left: int
    height: int
    width: int

    def as_mask(self, grid_height: int, grid_width: int) -> np.ndarray:
        if not (0 <= self.top and self.top + self.height <= grid_height
                and 0 <= self.left and self.left + self.width <= grid_width
                and self.height > 0 and self.width > 0):
            raise DimensionMismatch(
                f"ROI {self} does not fit a {grid_width}x{grid_height} frame"
            )
        m = np.zeros((grid_height, grid_width), dtype=bool)
        m[self.top:self.top + self.height, self.left:self.left + self.width] = True
        return m


def _default_blobs() -> tuple[Blob, ...]:
    # Peaks land between ~27.3 and ~30.7 absolute over the default
    # 26.0-27.5 gradient, mirroring typical afternoon deck readings.
    return (
        Blob(60.0, 60.0, 22.0, 3.6),
        Blob(90.0, 170.0, 30.0, 2.4),
        Blob(150.0, 110.0, 16.0, 1.6),
        Blob(130.0, 215.0, 12.0, 1.1),
    )


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for a synthetic thermal deck scene.

    The clean background is a vertical linear gradient from ``bg_min``
    (top row) to ``bg_max`` (bottom row) plus an optional single-period
    sinusoidal undulation of the given amplitude.  A hot band (joint) and
    a shadow strip can be added at the bottom/top edges; the default ROI
    excludes both.  Blobs are Gaussian hot spots added on top; truth is
    every pixel whose summed blob contribution exceeds 0.1.
    """

    width: int = 256
    height: int = 192
    bg_min: float = 26.0
    bg_max: float = 27.5
    undulation: float = 0.0
    blobs: tuple[Blob, ...] = field(default_factory=_default_blobs)
    noise_sigma: float = 0.05
    rng_seed: int = 42
    roi: RectROI | None = RectROI(top=16, left=0, height=160, width=256)
    hot_band_rows: int = 12
    hot_band_temp: float = 33.0
    shadow_rows: int = 12
    shadow_temp: float = 19.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DimensionMismatch("scene must be at least 1x1")
        for b in self.blobs:
            if b.peak < 0 or b.radius <= 0:
                raise ValueError(f"blob contrast must be >= 0 and radius > 0: {b}")
            if not (0 <= b.center_row < self.height and 0 <= b.center_col < self.width):
                raise BlobOutOfBounds(
                    f"blob center ({b.center_row}, {b.center_col}) outside "
                    f"{self.width}x{self.height} frame"
                )
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def gen_signal_1d(n_samples: int, x_min: float = 0.0,
                  x_max: float = 4.0 * math.pi) -> ScalarGrid:
    """Uniformly sample sin(x) + 2*cos(2x + 5) + 3*sin(3x) on [x_min, x_max].

    This multi-scale test signal has regional maxima of widely varying
    prominence, which makes it a good exercise for dome extraction.
    """
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    if not x_min < x_max:
        raise ValueError(f"need x_min < x_max, got {x_min!r} >= {x_max!r}")
    x = np.linspace(x_min, x_max, n_samples)
    f = np.sin(x) + 2.0 * np.cos(2.0 * x + 5.0) + 3.0 * np.sin(3.0 * x)
    return ScalarGrid(f.reshape(1, -1))


def clean_background_field(spec: SceneSpec) -> np.ndarray:
    rows = np.arange(spec.height, dtype=np.float64)[:, None]
    cols = np.arange(spec.width, dtype=np.float64)[None, :]
    if spec.height > 1:
        frac = rows / (spec.height - 1)
    else:
        frac = np.zeros_like(rows)
    bg = spec.bg_min + (spec.bg_max - spec.bg_min) * frac
    bg = np.broadcast_to(bg, (spec.height, spec.width)).copy()
    if spec.undulation:
        bg += spec.undulation * (
            np.sin(2.0 * math.pi * rows / spec.height)
            * np.sin(2.0 * math.pi * cols / spec.width)
        )
    if spec.shadow_rows > 0:
        bg[: spec.shadow_rows, :] = spec.shadow_temp
    if spec.hot_band_rows > 0:
        bg[spec.height - spec.hot_band_rows:, :] = spec.hot_band_temp
    return bg


def blob_field(spec: SceneSpec) -> np.ndarray:
    rows = np.arange(spec.height, dtype=np.float64)[:, None]
    cols = np.arange(spec.width, dtype=np.float64)[None, :]
    total = np.zeros((spec.height, spec.width), dtype=np.float64)
    for b in spec.blobs:
        d2 = (rows - b.center_row) ** 2 + (cols - b.center_col) ** 2
        total += b.peak * np.exp(-d2 / (2.0 * b.sigma ** 2))
    return total


def gen_scene(spec: SceneSpec) -> tuple[ScalarGrid, LabelMask, ScalarGrid]:
    """Generate (grid, truth mask, clean background) for a scene spec.

    grid = clean background + blob field + Gaussian noise (PCG64-seeded);
    truth marks pixels whose blob contribution exceeds 0.1.  Output is
    bit-reproducible for a fixed spec.
    """
    clean = clean_background_field(spec)
    blobs = blob_field(spec)
    values = clean + blobs
    if spec.noise_sigma > 0:
        rng = np.random.Generator(np.random.PCG64(spec.rng_seed))
        values = values + rng.normal(0.0, spec.noise_sigma, size=values.shape)
    roi = spec.roi.as_mask(spec.height, spec.width) if spec.roi is not None else None
    grid = ScalarGrid(values, roi)
    inroi = grid.roi_mask()
    truth_fg = blobs > TRUTH_CONTRIBUTION
    labels = np.where(truth_fg & inroi, 1, 0).astype(np.int32)
    means = _class_means_from(blobs, labels, inroi, 2)
    truth = LabelMask(labels, 2, means, roi)
    return grid, truth, ScalarGrid(clean, roi)
