"""Core data types: scalar grids and flat structuring elements.

A :class:`ScalarGrid` is a 2-D row-major field of finite real values
(degrees Celsius for thermal data, dimensionless otherwise) with an
optional region-of-interest mask.  1-D signals are grids of height 1.

A :class:`StructuringElement` is the flat 4- or 8-connectivity
neighborhood over which min/max filtering operates.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, NonFiniteValue


class Connectivity(Enum):
    FOUR = 4
    EIGHT = 8


_OFFSETS_4 = ((-1, 0), (0, -1), (0, 1), (1, 0))
_OFFSETS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class StructuringElement:
    """Flat neighborhood defined by 4- or 8-connectivity.

    The offset set excludes (0, 0); filtering always includes the center
    pixel itself in addition to these neighbors.  The set is symmetric
    under negation, which the dilation/erosion duality relies on.
    """

    connectivity: Connectivity = Connectivity.EIGHT

    @property
    def offsets(self) -> tuple[tuple[int, int], ...]:
        """(dy, dx) neighbor offsets, excluding the center."""
        return _OFFSETS_4 if self.connectivity is Connectivity.FOUR else _OFFSETS_8

    @classmethod
    def four(cls) -> "StructuringElement":
        return cls(Connectivity.FOUR)

    @classmethod
    def eight(cls) -> "StructuringElement":
        return cls(Connectivity.EIGHT)

    @classmethod
    def from_connectivity(cls, n: int) -> "StructuringElement":
        if n == 4:
            return cls.four()
        if n == 8:
            return cls.eight()
        raise ValueError(f"connectivity must be 4 or 8, got {n!r}")


@dataclass(frozen=True, eq=False)
class ScalarGrid:
    """2-D scalar field with optional ROI mask.

    ``values`` is stored as a float64 array of shape (height, width) in
    row-major order.  All values must be finite.  ``roi``, when present,
    is a boolean array of the same shape; True marks pixels inside the
    region of interest.  Out-of-ROI pixels behave exactly like pixels
    beyond the image border: they are excluded from neighborhoods and
    copied through operations unchanged.

    Grids are treated as immutable; operations return new grids.
    """

    values: np.ndarray
    roi: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v.reshape(1, -1)
        if v.ndim != 2 or v.size == 0:
            raise DimensionMismatch(f"grid values must be non-empty 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue("grid values must be finite (no NaN or infinities)")
        v = np.ascontiguousarray(v)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.roi is not None:
            r = np.ascontiguousarray(np.asarray(self.roi, dtype=bool).reshape(v.shape[0], -1))
            if r.shape != v.shape:
                raise DimensionMismatch(
                    f"roi shape {r.shape} does not match values shape {v.shape}"
                )
            r.flags.writeable = False
            object.__setattr__(self, "roi", r)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def is_signal(self) -> bool:
        """True for 1-D data (height 1)."""
        return self.height == 1

    def roi_mask(self) -> np.ndarray:
        """Boolean ROI array; all-True when no ROI is set."""
        if self.roi is None:
            return np.ones(self.shape, dtype=bool)
        return self.roi

    def with_values(self, values: np.ndarray) -> "ScalarGrid":
        """New grid with the same ROI and replaced values."""
        return ScalarGrid(values, self.roi)

    @classmethod
    def from_flat(cls, width: int, height: int, values, roi=None) -> "ScalarGrid":
        """Build from a row-major flat sequence of length width*height."""
        v = np.asarray(list(values), dtype=np.float64)
        if v.size != width * height:
            raise DimensionMismatch(
                f"expected {width * height} values for {width}x{height}, got {v.size}"
            )
        r = None
        if roi is not None:
            r = np.asarray(list(roi), dtype=bool)
            if r.size != width * height:
                raise DimensionMismatch("roi length does not match width*height")
            r = r.reshape(height, width)
        return cls(v.reshape(height, width), r)

    @classmethod
    def signal(cls, values) -> "ScalarGrid":
        """1-D signal as a height-1 grid."""
        return cls(np.asarray(list(values), dtype=np.float64).reshape(1, -1))

    @classmethod
    def constant(cls, width: int, height: int, value: float) -> "ScalarGrid":
        return cls(np.full((height, width), float(value)))


def same_geometry(a: ScalarGrid, b: ScalarGrid) -> None:
    """Raise DimensionMismatch unless a and b share shape and ROI."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"grid shapes differ: {a.shape} vs {b.shape}")
    a_has, b_has = a.roi is not None, b.roi is not None
    if a_has != b_has or (a_has and not np.array_equal(a.roi, b.roi)):
        raise DimensionMismatch("grid ROIs differ")
