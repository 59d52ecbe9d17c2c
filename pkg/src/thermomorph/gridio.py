"""Grid and mask serialization plus color-mapped rendering.

Interchange formats are deliberately plain:

* grids: CSV (one row per line, comma-separated decimal literals,
  shortest round-trip representation) or grayscale PFM (portable float
  map, ``Pf``, 32-bit IEEE floats, little-endian written with scale
  -1.0, bottom-to-top row order per the format's convention).
* binary masks: 8-bit PGM (P5) or PNG; 0 is background, 255 foreground,
  and any nonzero pixel reads back as foreground.

All writers are atomic (temp file + rename).  All readers reject
non-finite values instead of propagating them.

Rendering maps a grid through a fixed 256-entry colormap shipped as
package data, so identical inputs produce byte-identical rasters.  The
value range legend goes into an adjacent text sidecar, never into the
pixels.
"""
from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    DegenerateRange,
    NonFiniteValue,
    ParseError,
    RaggedRows,
    UnsupportedDepth,
)
from .grid import ScalarGrid
from .segment import LabelMask

_GRID_FORMATS = ("csv", "pfm")
_MASK_FORMATS = ("pgm", "png")

#: RGB used for pixels outside the region of interest.
OUT_OF_ROI_COLOR = (64, 64, 64)


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(Path(path), text.encode("utf-8"))


def _infer_format(path: Path, explicit: str | None, allowed: tuple[str, ...]) -> str:
    if explicit is not None:
        fmt = explicit.lower()
    else:
        fmt = Path(path).suffix.lstrip(".").lower()
    if fmt not in allowed:
        raise ParseError(f"unsupported format {fmt!r} for {path} (expected one of {allowed})")
    return fmt


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

def read_grid(path, format: str | None = None) -> ScalarGrid:
    """Read a grid from CSV or PFM (format inferred from the suffix)."""
    path = Path(path)
    fmt = _infer_format(path, format, _GRID_FORMATS)
    if fmt == "csv":
        return _read_csv(path)
    return _read_pfm(path)


def write_grid(grid: ScalarGrid, path, format: str | None = None) -> None:
    """Write a grid as CSV (value-exact decimals) or PFM (bit-exact float32).

    The ROI is runtime metadata and is not serialized.
    """
    path = Path(path)
    fmt = _infer_format(path, format, _GRID_FORMATS)
    if fmt == "csv":
        lines = "\n".join(
            ",".join(repr(float(v)) for v in row) for row in grid.values
        )
        atomic_write_text(path, lines + "\n")
    else:
        f32 = grid.values.astype("<f4")
        header = f"Pf\n{grid.width} {grid.height}\n-1.0\n".encode("ascii")
        _atomic_write_bytes(path, header + np.flipud(f32).tobytes("C"))


def _read_csv(path: Path) -> ScalarGrid:
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if rows and len(cells) != len(rows[0]):
                raise RaggedRows(
                    f"row has {len(cells)} columns, expected {len(rows[0])}",
                    line=lineno,
                )
            parsed = []
            for colno, cell in enumerate(cells, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"not a decimal literal: {cell.strip()!r}",
                        line=lineno, column=colno,
                    ) from None
                if not math.isfinite(value):
                    raise NonFiniteValue(
                        f"non-finite value {cell.strip()!r} at line {lineno}, column {colno}"
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise ParseError(f"{path} holds no data rows")
    return ScalarGrid(np.asarray(rows, dtype=np.float64))


def _read_pfm(path: Path) -> ScalarGrid:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic == b"PF":
            raise ParseError(f"{path}: color PFM not supported, expected grayscale 'Pf'")
        if magic != b"Pf":
            raise ParseError(f"{path}: not a PFM file (magic {magic!r})")
        dims = fh.readline().split()
        if len(dims) != 2:
            raise ParseError(f"{path}: malformed PFM dimension line", line=2)
        try:
            width, height = int(dims[0]), int(dims[1])
            scale = float(fh.readline().strip())
        except ValueError as exc:
            raise ParseError(f"{path}: malformed PFM header ({exc})") from None
        if scale == 0:
            raise ParseError(f"{path}: PFM scale must be nonzero", line=3)
        endian = "<" if scale < 0 else ">"
        payload = fh.read(width * height * 4)
        if len(payload) != width * height * 4:
            raise ParseError(f"{path}: truncated PFM payload")
    data = np.frombuffer(payload, dtype=endian + "f4").reshape(height, width)
    data = np.flipud(data).astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise NonFiniteValue(f"{path}: PFM payload contains non-finite samples")
    return ScalarGrid(data)


# ---------------------------------------------------------------------------
# masks
# ---------------------------------------------------------------------------

def write_mask(mask: LabelMask, path, format: str | None = None) -> None:
    """Write a binary mask: background 0, foreground 255."""
    path = Path(path)
    fmt = _infer_format(path, format, _MASK_FORMATS)
    pixels = np.where(mask.foreground(), 255, 0).astype(np.uint8)
    if fmt == "pgm":
        header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
        _atomic_write_bytes(path, header + pixels.tobytes("C"))
    else:
        import io

        buf = io.BytesIO()
        Image.fromarray(pixels, mode="L").save(buf, format="PNG")
        _atomic_write_bytes(path, buf.getvalue())


def read_mask(path, format: str | None = None) -> LabelMask:
    """Read a binary mask; any nonzero pixel counts as foreground."""
    path = Path(path)
    fmt = _infer_format(path, format, _MASK_FORMATS)
    if fmt == "pgm":
        pixels = _read_pgm(path)
    else:
        with Image.open(path) as img:
            if img.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
                raise UnsupportedDepth(
                    f"{path}: only 8-bit masks are supported (mode {img.mode})"
                )
            pixels = np.asarray(img.convert("L"))
    fg = pixels != 0
    labels = fg.astype(np.int32)
    means = (0.0, 255.0) if fg.any() else (0.0, math.nan)
    if not (~fg).any():
        means = (math.nan, 255.0)
    return LabelMask(labels, 2, means)


def _read_pgm(path: Path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()

    def tokens():
        i = 0
        while i < len(data):
            if data[i:i + 1].isspace():
                i += 1
            elif data[i:i + 1] == b"#":
                while i < len(data) and data[i] != 0x0A:
                    i += 1
            else:
                j = i
                while j < len(data) and not data[j:j + 1].isspace():
                    j += 1
                yield i, data[i:j]
                i = j

    it = tokens()
    try:
        _, magic = next(it)
        if magic != b"P5":
            raise ParseError(f"{path}: expected binary PGM magic 'P5', got {magic!r}")
        _, w_tok = next(it)
        _, h_tok = next(it)
        off, max_tok = next(it)
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except StopIteration:
        raise ParseError(f"{path}: truncated PGM header") from None
    except ValueError as exc:
        raise ParseError(f"{path}: malformed PGM header ({exc})") from None
    if maxval > 255:
        raise UnsupportedDepth(f"{path}: {maxval}-level PGM not supported (8-bit only)")
    start = off + len(max_tok) + 1  # single whitespace byte after maxval
    payload = data[start:start + width * height]
    if len(payload) != width * height:
        raise ParseError(f"{path}: truncated PGM payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _load_colormap() -> np.ndarray:
    text = resources.files("thermomorph").joinpath("data/thermal_colormap.csv").read_text()
    table = np.asarray(
        [[int(c) for c in line.split(",")] for line in text.strip().splitlines()],
        dtype=np.uint8,
    )
    if table.shape != (256, 3):
        raise ParseError("thermal colormap table must be 256x3")
    return table


_THERMAL = _load_colormap()
_GRAY = np.repeat(np.arange(256, dtype=np.uint8)[:, None], 3, axis=1)


@dataclass(frozen=True)
class RenderSpec:
    """How to color a grid: colormap and value range.

    ``vmin``/``vmax`` of None means auto (min/max of the in-ROI data).
    An explicit range must have vmin < vmax.  Values outside the range
    clamp to its ends.
    """

    colormap: str = "thermal"
    vmin: float | None = None
    vmax: float | None = None

    def __post_init__(self):
        if self.colormap not in ("thermal", "gray"):
            raise ValueError(f"colormap must be 'thermal' or 'gray', got {self.colormap!r}")
        if self.vmin is not None and self.vmax is not None and not self.vmin < self.vmax:
            raise DegenerateRange(f"explicit range needs vmin < vmax, got [{self.vmin}, {self.vmax}]")


@dataclass(frozen=True)
class RenderInfo:
    """What a render actually did (range used, degenerate-range flag)."""

    path: Path
    legend_path: Path
    vmin: float
    vmax: float
    degenerate: bool


def render(grid: ScalarGrid, spec: RenderSpec, path) -> RenderInfo:
    """Render a grid to an 8-bit color raster (.ppm or .png).

    Deterministic for fixed inputs.  Out-of-ROI pixels take a dark gray.
    When the auto range collapses (constant data) the raster is uniform
    mid-color and the returned info carries ``degenerate=True``.  A text
    sidecar ``<path>.legend.txt`` records the value range.
    """
    path = Path(path)
    table = _THERMAL if spec.colormap == "thermal" else _GRAY
    inroi = grid.roi_mask()
    data = grid.values
    vmin = spec.vmin if spec.vmin is not None else float(data[inroi].min())
    vmax = spec.vmax if spec.vmax is not None else float(data[inroi].max())
    degenerate = not vmin < vmax
    if degenerate:
        index = np.full(grid.shape, 128, dtype=np.intp)
    else:
        scaled = (data - vmin) / (vmax - vmin)
        index = np.clip(np.rint(scaled * 255.0), 0, 255).astype(np.intp)
    rgb = table[index]
    rgb[~inroi] = OUT_OF_ROI_COLOR
    suffix = path.suffix.lower()
    if suffix == ".ppm":
        header = f"P6\n{grid.width} {grid.height}\n255\n".encode("ascii")
        _atomic_write_bytes(path, header + rgb.tobytes("C"))
    elif suffix == ".png":
        import io

        buf = io.BytesIO()
        Image.fromarray(rgb, mode="RGB").save(buf, format="PNG")
        _atomic_write_bytes(path, buf.getvalue())
    else:
        raise ParseError(f"render output must be .ppm or .png, got {path.name!r}")
    legend_path = path.with_name(path.name + ".legend.txt")
    legend = (
        f"colormap = {spec.colormap}\n"
        f"vmin = {vmin!r}\n"
        f"vmax = {vmax!r}\n"
        f"degenerate = {str(degenerate).lower()}\n"
        f"out_of_roi = dark gray {OUT_OF_ROI_COLOR}\n"
    )
    atomic_write_text(legend_path, legend)
    return RenderInfo(path, legend_path, vmin, vmax, degenerate)
