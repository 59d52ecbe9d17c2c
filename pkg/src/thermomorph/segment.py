"""Segmentation back-ends and mask evaluation.

Detectors applied to raw or residual grids: global thresholding and
deterministic 1-D k-means (Lloyd iterations on the value distribution),
plus tri-level condition classification, connected-component extraction,
and pixel-count evaluation against truth masks.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import (
    DimensionMismatch,
    InsufficientDistinctValues,
    UnsupportedK,
)
from .grid import ScalarGrid, StructuringElement


@dataclass(frozen=True, eq=False)
class LabelMask:
    """Per-pixel integer class labels with per-class mean values.

    Labels lie in [0, k) and are numbered so that class 0 has the lowest
    mean value; ``class_means`` is strictly ascending (NaN entries mark
    empty classes and are skipped by the ordering check).  Out-of-ROI
    pixels carry label 0 and are excluded from statistics.
    """

    labels: np.ndarray
    k: int
    class_means: tuple[float, ...]
    roi: np.ndarray | None = None

    def __post_init__(self):
        lab = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int32))
        if lab.ndim == 1:
            lab = lab.reshape(1, -1)
        if lab.ndim != 2 or lab.size == 0:
            raise DimensionMismatch(f"labels must be non-empty 2-D, got shape {lab.shape}")
        if lab.min() < 0 or lab.max() >= self.k:
            raise ValueError(f"labels must lie in [0, {self.k})")
        if len(self.class_means) != self.k:
            raise ValueError("class_means length must equal k")
        finite = [m for m in self.class_means if not math.isnan(m)]
        if any(b <= a for a, b in zip(finite, finite[1:])):
            raise ValueError("non-empty class means must be strictly ascending")
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "class_means", tuple(float(m) for m in self.class_means))
        if self.roi is not None:
            r = np.ascontiguousarray(np.asarray(self.roi, dtype=bool))
            if r.shape != lab.shape:
                raise DimensionMismatch("roi shape does not match labels shape")
            if lab[~r].any():
                raise ValueError("out-of-ROI pixels must carry label 0")
            r.flags.writeable = False
            object.__setattr__(self, "roi", r)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def roi_mask(self) -> np.ndarray:
        if self.roi is None:
            return np.ones(self.shape, dtype=bool)
        return self.roi

    def foreground(self) -> np.ndarray:
        """Boolean foreground for binary (k=2) masks."""
        if self.k != 2:
            raise UnsupportedK(f"foreground() needs a binary mask, got k={self.k}")
        return self.labels == 1


def _class_means_from(values: np.ndarray, labels: np.ndarray,
                      inroi: np.ndarray, k: int) -> tuple[float, ...]:
    means = []
    for i in range(k):
        sel = (labels == i) & inroi
        means.append(float(values[sel].mean()) if sel.any() else math.nan)
    return tuple(means)


def binary_mask_from_bool(fg: np.ndarray, grid: ScalarGrid) -> LabelMask:
    """Binary LabelMask from a boolean array, statistics taken from ``grid``."""
    inroi = grid.roi_mask()
    labels = np.where(fg & inroi, 1, 0).astype(np.int32)
    means = _class_means_from(grid.values, labels, inroi, 2)
    return LabelMask(labels, 2, means, grid.roi)


def threshold_segment(grid: ScalarGrid, tau: float) -> LabelMask:
    """Global threshold: label 1 where value > tau within the ROI, else 0."""
    return binary_mask_from_bool(grid.values > tau, grid)


def _quantile_seeds(sorted_values: np.ndarray, k: int) -> np.ndarray:
    n = sorted_values.size
    idx = np.minimum((np.floor((np.arange(k) + 0.5) * n / k)).astype(np.int64), n - 1)
    return sorted_values[idx].astype(np.float64)


def _reseed_empty(values: np.ndarray, centroids: np.ndarray,
                  assign: np.ndarray, empty_index: int) -> float:
    """Value farthest from its assigned centroid; ties pick the lowest value."""
    dist = np.abs(values - centroids[assign])
    worst = dist.max()
    candidates = values[dist == worst]
    for v in np.sort(candidates):
        if not np.any(centroids == v):
            return float(v)
    return float(np.sort(candidates)[0])


def _lloyd(values: np.ndarray, k: int, tol: float, max_iter: int):
    """Deterministic 1-D Lloyd iterations.

    Seeding: the (i + 0.5)/k quantiles of the sorted values (index
    floor((i + 0.5) * n / k)).  Assignment ties go to the lower-valued
    centroid.  Empty clusters are re-seeded at the value farthest from
    its assigned centroid.  Returns (centroids, assignment, within-class
    sum-of-squares trace, reseed count).
    """
    centroids = np.sort(_quantile_seeds(np.sort(values), k))
    wcss_trace: list[float] = []
    reseeds = 0
    assign = np.zeros(values.size, dtype=np.int64)
    for _ in range(max_iter):
        # Ascending centroid order makes argmin's first-index rule pick
        # the lower centroid on ties.
        dist = np.abs(values[:, None] - centroids[None, :])
        assign = np.argmin(dist, axis=1)
        for _attempt in range(k):
            counts = np.bincount(assign, minlength=k)
            empties = np.flatnonzero(counts == 0)
            if empties.size == 0:
                break
            centroids[empties[0]] = _reseed_empty(values, centroids, assign, empties[0])
            reseeds += 1
            order = np.argsort(centroids, kind="stable")
            centroids = centroids[order]
            dist = np.abs(values[:, None] - centroids[None, :])
            assign = np.argmin(dist, axis=1)
        wcss_trace.append(float(np.sum((values - centroids[assign]) ** 2)))
        new_centroids = np.array(
            [values[assign == i].mean() for i in range(k)], dtype=np.float64
        )
        movement = float(np.max(np.abs(new_centroids - centroids)))
        order = np.argsort(new_centroids, kind="stable")
        centroids = new_centroids[order]
        if not np.array_equal(order, np.arange(k)):
            remap = np.empty(k, dtype=np.int64)
            remap[order] = np.arange(k)
            assign = remap[assign]
        if movement < tol:
            break
    return centroids, assign, wcss_trace, reseeds


def kmeans_segment(grid: ScalarGrid, k: int, tol: float = 1e-6,
                   max_iter: int = 100) -> LabelMask:
    """Deterministic k-means on the 1-D value distribution of in-ROI pixels.

    Quantile seeding, lower-centroid tie rule and deterministic empty-
    cluster re-seeding make identical inputs produce bit-identical masks.
    Classes are numbered ascending by mean.  Raises
    InsufficientDistinctValues when the in-ROI pixels hold fewer than k
    distinct values.
    """
    if k < 1:
        raise UnsupportedK(f"k must be >= 1, got {k}")
    inroi = grid.roi_mask()
    values = grid.values[inroi]
    if np.unique(values).size < k:
        raise InsufficientDistinctValues(
            f"need at least {k} distinct in-ROI values, got {np.unique(values).size}"
        )
    centroids, assign, _, _ = _lloyd(values.astype(np.float64), k, tol, max_iter)
    labels = np.zeros(grid.shape, dtype=np.int32)
    labels[inroi] = assign
    means = _class_means_from(grid.values, labels, inroi, k)
    return LabelMask(labels, k, means, grid.roi)


class Condition(IntEnum):
    """Tri-level condition coding for classified masks."""

    SOUND = 0
    POSSIBLE = 1
    DELAMINATED = 2


@dataclass(frozen=True, eq=False)
class ConditionMask:
    """Tri-state condition view of a k=2 or k=3 label mask."""

    conditions: np.ndarray  # uint8 array of Condition codes
    source_k: int
    roi: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.conditions.shape

    def fraction(self, condition: Condition) -> float:
        inroi = np.ones(self.shape, dtype=bool) if self.roi is None else self.roi
        total = int(inroi.sum())
        if total == 0:
            return 0.0
        return float(np.sum((self.conditions == condition) & inroi)) / total


def classify_levels(mask: LabelMask) -> ConditionMask:
    """Map class labels to sound / possible / delaminated conditions.

    For k=3 the lowest-mean class is sound, the middle possible, the
    highest delaminated.  For k=2 there is no "possible" level: lowest is
    sound, highest delaminated.  Classes are already mean-ordered, so the
    mapping is by class index (equal-mean degeneracies keep index order).
    """
    if mask.k == 2:
        table = np.array([Condition.SOUND, Condition.DELAMINATED], dtype=np.uint8)
    elif mask.k == 3:
        table = np.array(
            [Condition.SOUND, Condition.POSSIBLE, Condition.DELAMINATED], dtype=np.uint8
        )
    else:
        raise UnsupportedK(f"condition classification supports k in {{2, 3}}, got k={mask.k}")
    return ConditionMask(table[mask.labels], mask.k, mask.roi)


@dataclass(frozen=True)
class Region:
    """One connected foreground region."""

    label: int
    area: int
    bbox: tuple[int, int, int, int]  # (top, left, bottom, right), inclusive
    centroid: tuple[float, float]  # (row, col)


def connected_components(mask: LabelMask,
                         se: StructuringElement = StructuringElement(),
                         ) -> list[Region]:
    """Maximal connected foreground regions of a binary mask.

    Connectivity follows ``se``.  Regions are ordered by (min row,
    min col) of their bounding boxes and labeled 1..n in that order.
    """
    fg = mask.foreground() & mask.roi_mask()
    h, w = fg.shape
    seen = np.zeros_like(fg)
    offsets = se.offsets
    raw: list[tuple[tuple[int, int], int, tuple[int, int, int, int], tuple[float, float]]] = []
    for r0 in range(h):
        for c0 in range(w):
            if not fg[r0, c0] or seen[r0, c0]:
                continue
            queue = deque([(r0, c0)])
            seen[r0, c0] = True
            area = 0
            rsum = csum = 0
            top, left, bottom, right = r0, c0, r0, c0
            while queue:
                r, c = queue.popleft()
                area += 1
                rsum += r
                csum += c
                top, bottom = min(top, r), max(bottom, r)
                left, right = min(left, c), max(right, c)
                for dy, dx in offsets:
                    rr, cc = r + dy, c + dx
                    if 0 <= rr < h and 0 <= cc < w and fg[rr, cc] and not seen[rr, cc]:
                        seen[rr, cc] = True
                        queue.append((rr, cc))
            raw.append(((top, left), area, (top, left, bottom, right),
                        (rsum / area, csum / area)))
    raw.sort(key=lambda item: item[0])
    return [
        Region(i + 1, area, bbox, centroid)
        for i, (_, area, bbox, centroid) in enumerate(raw)
    ]


@dataclass(frozen=True)
class DetectionReport:
    """Pixel-count agreement of a predicted mask with a truth mask.

    Counts are taken within the ROI.  Ratio metrics with a zero
    denominator are reported as 0.0 with ``degenerate`` set.
    """

    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int
    precision: float
    recall: float
    f1: float
    iou: float
    degenerate: bool = False


def evaluate(pred: LabelMask, truth: LabelMask) -> DetectionReport:
    """Compare two binary masks over their (shared) ROI."""
    if pred.shape != truth.shape:
        raise DimensionMismatch(f"mask shapes differ: {pred.shape} vs {truth.shape}")
    p_has, t_has = pred.roi is not None, truth.roi is not None
    if p_has != t_has or (p_has and not np.array_equal(pred.roi, truth.roi)):
        raise DimensionMismatch("mask ROIs differ")
    inroi = pred.roi_mask()
    p = pred.foreground() & inroi
    t = truth.foreground() & inroi
    tp = int(np.sum(p & t))
    fp = int(np.sum(p & ~t & inroi))
    fn = int(np.sum(~p & t & inroi))
    tn = int(np.sum(~p & ~t & inroi))
    degenerate = False

    def ratio(num: int, den: int) -> float:
        nonlocal degenerate
        if den == 0:
            degenerate = True
            return 0.0
        return num / den

    precision = ratio(tp, tp + fp)
    recall = ratio(tp, tp + fn)
    f1 = ratio(2 * tp, 2 * tp + fp + fn)
    iou = ratio(tp, tp + fp + fn)
    return DetectionReport(tp, fp, fn, tn, precision, recall, f1, iou, degenerate)
