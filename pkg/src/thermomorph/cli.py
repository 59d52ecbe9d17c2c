"""Command-line pipeline driver.

Subcommands
-----------
synth       generate a synthetic scene (grid + truth mask + clean background)
background  estimate the background of a grid; emit background, residual,
            per-iteration trace and convergence status
segment     threshold or k-means segmentation of a grid
pipeline    synth-or-load -> background -> residual -> segment -> evaluate
            (when truth is available) -> report
eval        score a predicted mask against a truth mask
bench       time naive vs queue reconstruction on seeded random grids

Runs are driven by a flat ``key = value`` config file (``#`` comments
allowed, unknown keys rejected).  Reports are written as versioned
key/value text documents that echo the full effective configuration, so
any run can be replayed.  All outputs are written atomically.

Exit codes: 0 success, 2 config error, 3 data error, 4 non-convergence
when --strict is set.
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .background import BackgroundConfig, BackgroundResult, estimate_background, residual
from .errors import ConfigError, ThermomorphError
from .grid import ScalarGrid, StructuringElement
from .gridio import RenderSpec, atomic_write_text, read_grid, read_mask, render, write_grid, write_mask
from .morpho import ReconstructionMethod, reconstruct_by_dilation
from .segment import LabelMask, classify_levels, evaluate, kmeans_segment, threshold_segment
from .synth import Blob, RectROI, SceneSpec, gen_scene

REPORT_SCHEMA = "thermomorph.report/1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NOT_CONVERGED = 4


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

def parse_kv_file(path: Path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; '#' starts a comment line."""
    entries: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in entries:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def _parse_bool(key: str, value: str) -> bool:
    if value.lower() in ("true", "yes", "1"):
        return True
    if value.lower() in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {value!r}")


def _parse_roi(key: str, value: str) -> RectROI | None:
    if value.lower() == "none":
        return None
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 4:
        raise ConfigError(f"{key}: expected 'top,left,height,width', got {value!r}")
    try:
        top, left, height, width = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{key}: ROI fields must be integers: {value!r}") from None
    return RectROI(top, left, height, width)


def _typed(key: str, value: str, kind):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind.__name__}") from None


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration (defaults applied)."""

    input: str | None = None
    input_format: str | None = None
    scene: str | None = None
    truth: str | None = None
    truth_format: str | None = None
    roi: RectROI | None = None
    h: float = 0.5
    max_iterations: int = 64
    connectivity: int = 8
    method: str = "queue"
    segmentation: str = "threshold"
    source: str = "residual"
    tau: float | None = None
    tau_raw: float | None = None
    k: int = 3
    kmeans_tol: float = 1e-6
    kmeans_max_iter: int = 100
    out_dir: str = "out"
    snapshots: bool = False
    render: bool = False
    strict: bool = False

    @classmethod
    def from_file(cls, path: Path) -> "RunConfig":
        entries = parse_kv_file(path)
        known = {
            "input": str, "input_format": str, "scene": str, "truth": str,
            "truth_format": str, "roi": None, "h": float, "max_iterations": int,
            "connectivity": int, "method": str, "segmentation": str, "source": str,
            "tau": float, "tau_raw": float, "k": int, "kmeans_tol": float,
            "kmeans_max_iter": int, "out_dir": str, "snapshots": bool,
            "render": bool, "strict": bool,
        }
        unknown = sorted(set(entries) - set(known))
        if unknown:
            raise ConfigError(f"{path}: unknown keys: {', '.join(unknown)}")
        kwargs = {}
        for key, value in entries.items():
            kind = known[key]
            if key == "roi":
                kwargs[key] = _parse_roi(key, value)
            elif kind is bool:
                kwargs[key] = _parse_bool(key, value)
            else:
                kwargs[key] = _typed(key, value, kind)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.connectivity not in (4, 8):
            raise ConfigError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.method not in ("naive", "queue"):
            raise ConfigError(f"method must be naive or queue, got {self.method!r}")
        if self.segmentation not in ("threshold", "kmeans"):
            raise ConfigError(
                f"segmentation must be threshold or kmeans, got {self.segmentation!r}"
            )
        if self.source not in ("raw", "residual"):
            raise ConfigError(f"source must be raw or residual, got {self.source!r}")
        if self.h <= 0:
            raise ConfigError(f"h must be positive, got {self.h}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.input is None and self.scene is None:
            raise ConfigError("config needs either 'input' (grid file) or 'scene' (scene spec)")

    def structuring_element(self) -> StructuringElement:
        return StructuringElement.from_connectivity(self.connectivity)

    def reconstruction_method(self) -> ReconstructionMethod:
        return ReconstructionMethod(self.method)

    def default_tau(self, source: str) -> float | None:
        """Residual grids default to tau = h; raw grids have no default."""
        if self.tau is not None:
            return self.tau
        return self.h if source == "residual" else None

    def as_report_entries(self) -> dict[str, object]:
        roi = "none" if self.roi is None else \
            f"{self.roi.top},{self.roi.left},{self.roi.height},{self.roi.width}"
        return {
            "config.input": self.input or "none",
            "config.input_format": self.input_format or "auto",
            "config.scene": self.scene or "none",
            "config.truth": self.truth or "none",
            "config.truth_format": self.truth_format or "auto",
            "config.roi": roi,
            "config.h": self.h,
            "config.max_iterations": self.max_iterations,
            "config.connectivity": self.connectivity,
            "config.method": self.method,
            "config.segmentation": self.segmentation,
            "config.source": self.source,
            "config.tau": "none" if self.tau is None else self.tau,
            "config.tau_raw": "none" if self.tau_raw is None else self.tau_raw,
            "config.k": self.k,
            "config.kmeans_tol": self.kmeans_tol,
            "config.kmeans_max_iter": self.kmeans_max_iter,
            "config.out_dir": self.out_dir,
            "config.snapshots": str(self.snapshots).lower(),
            "config.render": str(self.render).lower(),
            "config.strict": str(self.strict).lower(),
        }


_SCENE_KEYS = {
    "width": int, "height": int, "bg_min": float, "bg_max": float,
    "undulation": float, "noise_sigma": float, "seed": int, "roi": None,
    "hot_band_rows": int, "hot_band_temp": float, "shadow_rows": int,
    "shadow_temp": float, "blobs": str,
}


def scene_spec_from_file(path: Path) -> SceneSpec:
    """Build a SceneSpec from a flat key=value file.

    Blob keys are ``blob1 = row,col,radius,peak`` and so on; ``blobs =
    none`` clears the default blob set.  Omitted keys keep SceneSpec
    defaults.
    """
    entries = parse_kv_file(path)
    blob_keys = sorted(k for k in entries if k.startswith("blob") and k != "blobs")
    unknown = sorted(set(entries) - set(_SCENE_KEYS) - set(blob_keys))
    if unknown:
        raise ConfigError(f"{path}: unknown scene keys: {', '.join(unknown)}")
    kwargs = {}
    for key, value in entries.items():
        if key in blob_keys:
            continue
        if key == "roi":
            kwargs["roi"] = _parse_roi(key, value)
        elif key == "blobs":
            if value.lower() != "none":
                raise ConfigError("blobs key only accepts 'none'; use blob1, blob2, ...")
            kwargs["blobs"] = ()
        elif key == "seed":
            kwargs["rng_seed"] = _typed(key, value, int)
        else:
            kwargs[key] = _typed(key, value, _SCENE_KEYS[key])
    blobs = []
    for key in blob_keys:
        parts = [p.strip() for p in entries[key].split(",")]
        if len(parts) != 4:
            raise ConfigError(f"{key}: expected 'row,col,radius,peak', got {entries[key]!r}")
        row, col, radius, peak = (_typed(key, p, float) for p in parts)
        blobs.append(Blob(row, col, radius, peak))
    if blobs:
        kwargs["blobs"] = tuple(blobs)
    try:
        return SceneSpec(**kwargs)
    except (ThermomorphError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid scene spec: {exc}") from None


def scene_report_entries(spec: SceneSpec) -> dict[str, object]:
    roi = "none" if spec.roi is None else \
        f"{spec.roi.top},{spec.roi.left},{spec.roi.height},{spec.roi.width}"
    entries: dict[str, object] = {
        "scene.width": spec.width, "scene.height": spec.height,
        "scene.bg_min": spec.bg_min, "scene.bg_max": spec.bg_max,
        "scene.undulation": spec.undulation, "scene.noise_sigma": spec.noise_sigma,
        "scene.seed": spec.rng_seed, "scene.roi": roi,
        "scene.hot_band_rows": spec.hot_band_rows,
        "scene.hot_band_temp": spec.hot_band_temp,
        "scene.shadow_rows": spec.shadow_rows, "scene.shadow_temp": spec.shadow_temp,
    }
    for i, b in enumerate(spec.blobs, start=1):
        entries[f"scene.blob{i}"] = f"{b.center_row},{b.center_col},{b.radius},{b.peak}"
    return entries


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def write_report(path: Path, command: str, entries: dict[str, object]) -> None:
    lines = [f"schema = {REPORT_SCHEMA}", f"command = {command}"]
    for key in sorted(entries):
        value = entries[key]
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def read_report(path: Path) -> dict[str, str]:
    return parse_kv_file(Path(path))


def _report_metrics(prefix: str, report) -> dict[str, object]:
    return {
        f"{prefix}.true_positives": report.true_positives,
        f"{prefix}.false_positives": report.false_positives,
        f"{prefix}.false_negatives": report.false_negatives,
        f"{prefix}.true_negatives": report.true_negatives,
        f"{prefix}.precision": report.precision,
        f"{prefix}.recall": report.recall,
        f"{prefix}.f1": report.f1,
        f"{prefix}.iou": report.iou,
        f"{prefix}.degenerate": str(report.degenerate).lower(),
    }


# ---------------------------------------------------------------------------
# shared pipeline pieces
# ---------------------------------------------------------------------------

def _apply_roi(grid: ScalarGrid, roi: RectROI | None) -> ScalarGrid:
    if roi is None:
        return grid
    return ScalarGrid(grid.values, roi.as_mask(grid.height, grid.width))


def _mask_with_roi(mask: LabelMask, roi: np.ndarray | None) -> LabelMask:
    if roi is None and mask.roi is None:
        return mask
    if roi is None:
        return mask
    labels = np.where(roi, mask.labels, 0).astype(np.int32)
    fg = labels == 1
    means = (0.0, 255.0)
    if not fg.any():
        means = (0.0, float("nan"))
    elif fg.all():
        means = (float("nan"), 255.0)
    return LabelMask(labels, 2, means, roi)


def _load_inputs(cfg: RunConfig):
    """Resolve (grid, truth_mask_or_None, scene_entries) from the config."""
    extra: dict[str, object] = {}
    if cfg.scene is not None:
        spec = scene_spec_from_file(Path(cfg.scene))
        grid, truth, _clean = gen_scene(spec)
        extra.update(scene_report_entries(spec))
        if cfg.roi is not None:
            grid = _apply_roi(grid, cfg.roi)
            truth = _mask_with_roi(truth, grid.roi)
    else:
        grid = _apply_roi(read_grid(Path(cfg.input), cfg.input_format), cfg.roi)
        truth = None
    if cfg.truth is not None:
        truth = _mask_with_roi(read_mask(Path(cfg.truth), cfg.truth_format), grid.roi_mask() if grid.roi is not None else None)
        if truth.shape != grid.shape:
            raise ThermomorphError(
                f"truth mask shape {truth.shape} does not match grid {grid.shape}"
            )
    return grid, truth, extra


def top_class_mask(mask: LabelMask) -> LabelMask:
    """Binary view of a label mask: highest-mean class vs everything else."""
    fg = mask.labels == (mask.k - 1)
    labels = fg.astype(np.int32)
    means = (0.0, 1.0)
    if not fg.any():
        means = (0.0, float("nan"))
    elif fg.all():
        means = (float("nan"), 1.0)
    return LabelMask(labels, 2, means, mask.roi)


def best_threshold_by_grid_search(grid: ScalarGrid, truth: LabelMask,
                                  n_taus: int = 50) -> tuple[float, float]:
    """(tau, iou) of the best of n evenly spaced thresholds over the grid range."""
    inroi = grid.roi_mask()
    lo = float(grid.values[inroi].min())
    hi = float(grid.values[inroi].max())
    best_tau, best_iou = lo, -1.0
    for tau in np.linspace(lo, hi, n_taus):
        report = evaluate(threshold_segment(grid, float(tau)), truth)
        if report.iou > best_iou:
            best_tau, best_iou = float(tau), report.iou
    return best_tau, best_iou


def _run_background(grid: ScalarGrid, cfg: RunConfig) -> BackgroundResult:
    bg_cfg = BackgroundConfig(
        h=cfg.h, max_iterations=cfg.max_iterations,
        se=cfg.structuring_element(), record_snapshots=cfg.snapshots,
    )
    return estimate_background(grid, bg_cfg, cfg.reconstruction_method())


def _write_trace(path: Path, result: BackgroundResult) -> None:
    lines = [f"{n} {d!r}" for n, d in enumerate(result.max_diffs, start=1)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def _segment_one(grid: ScalarGrid, cfg: RunConfig, source: str):
    """Run the configured segmentation; returns (label_mask, entries)."""
    entries: dict[str, object] = {}
    if cfg.segmentation == "threshold":
        tau = cfg.default_tau(source)
        if tau is None:
            raise ConfigError(
                "threshold segmentation of a raw grid needs an explicit tau"
            )
        mask = threshold_segment(grid, tau)
        entries["segment.tau"] = tau
    else:
        mask = kmeans_segment(grid, cfg.k, cfg.kmeans_tol, cfg.kmeans_max_iter)
        entries["segment.k"] = cfg.k
        for i, m in enumerate(mask.class_means):
            entries[f"segment.class_mean_{i}"] = m
    entries["segment.kind"] = cfg.segmentation
    entries["segment.source"] = source
    return mask, entries


def _render_condition(mask: LabelMask, path: Path) -> None:
    """Tri-level render: sound black, possible gray, delaminated white."""
    view = classify_levels(mask)
    shade = np.array([0, 128, 255], dtype=np.uint8)[view.conditions]
    grid = ScalarGrid(shade.astype(np.float64), mask.roi)
    render(grid, RenderSpec(colormap="gray", vmin=0.0, vmax=255.0), path)


def _write_labels_csv(mask: LabelMask, path: Path) -> None:
    lines = "\n".join(",".join(str(int(v)) for v in row) for row in mask.labels)
    atomic_write_text(path, lines + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    spec = scene_spec_from_file(Path(args.spec))
    out = Path(args.out)
    grid, truth, clean = gen_scene(spec)
    write_grid(grid, out / "scene.pfm")
    write_grid(clean, out / "clean_background.pfm")
    write_mask(truth, out / "truth.pgm")
    entries = scene_report_entries(spec)
    entries.update({
        "outputs.scene": str(out / "scene.pfm"),
        "outputs.clean_background": str(out / "clean_background.pfm"),
        "outputs.truth": str(out / "truth.pgm"),
    })
    if args.render:
        render(grid, RenderSpec(), out / "scene.ppm")
        entries["outputs.scene_render"] = str(out / "scene.ppm")
    write_report(out / "report.txt", "synth", entries)
    print(f"scene written to {out}")
    return EXIT_OK


def cmd_background(args) -> int:
    cfg = RunConfig.from_file(Path(args.config))
    if args.strict:
        cfg = replace(cfg, strict=True)
    grid, _truth, extra = _load_inputs(cfg)
    out = Path(cfg.out_dir)
    result = _run_background(grid, cfg)
    resid = residual(grid, result)
    write_grid(result.background, out / "background.pfm")
    write_grid(resid, out / "residual.pfm")
    _write_trace(out / "trace.txt", result)
    entries = cfg.as_report_entries()
    entries.update(extra)
    entries.update({
        "background.iterations": result.iterations,
        "background.converged": str(result.converged).lower(),
        "background.max_diff_final": result.max_diffs[-1],
        "outputs.background": str(out / "background.pfm"),
        "outputs.residual": str(out / "residual.pfm"),
        "outputs.trace": str(out / "trace.txt"),
    })
    if cfg.snapshots and result.snapshots:
        for n, snap in enumerate(result.snapshots, start=1):
            write_grid(snap, out / f"background_pass_{n:03d}.pfm")
        entries["outputs.snapshot_count"] = len(result.snapshots)
    if cfg.render:
        vmin = float(grid.values[grid.roi_mask()].min())
        vmax = float(grid.values[grid.roi_mask()].max())
        shared = RenderSpec(vmin=vmin, vmax=vmax)
        render(grid, shared, out / "input.ppm")
        render(result.background, shared, out / "background.ppm")
        render(resid, RenderSpec(), out / "residual.ppm")
        if cfg.snapshots and result.snapshots:
            for n, snap in enumerate(result.snapshots, start=1):
                render(snap, shared, out / f"background_pass_{n:03d}.ppm")
    write_report(out / "report.txt", "background", entries)
    print(
        f"background: iterations={result.iterations} converged={result.converged} "
        f"final_max_diff={result.max_diffs[-1]!r}"
    )
    if cfg.strict and not result.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_segment(args) -> int:
    cfg = RunConfig.from_file(Path(args.config))
    grid, truth, extra = _load_inputs(cfg)
    out = Path(cfg.out_dir)
    mask, entries = _segment_one(grid, cfg, cfg.source)
    entries.update(cfg.as_report_entries())
    entries.update(extra)
    _write_labels_csv(mask, out / "labels.csv")
    entries["outputs.labels"] = str(out / "labels.csv")
    if mask.k == 2:
        write_mask(mask, out / "mask.pgm")
        entries["outputs.mask"] = str(out / "mask.pgm")
    else:
        write_mask(top_class_mask(mask), out / "mask_top_class.pgm")
        entries["outputs.mask"] = str(out / "mask_top_class.pgm")
    if cfg.render and mask.k in (2, 3):
        _render_condition(mask, out / "condition.ppm")
        entries["outputs.condition_render"] = str(out / "condition.ppm")
    if truth is not None:
        binary = mask if mask.k == 2 else top_class_mask(mask)
        entries.update(_report_metrics("eval.segment", evaluate(binary, truth)))
    write_report(out / "report.txt", "segment", entries)
    print(f"segmentation written to {out}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = RunConfig.from_file(Path(args.config))
    if args.strict:
        cfg = replace(cfg, strict=True)
    grid, truth, extra = _load_inputs(cfg)
    out = Path(cfg.out_dir)
    entries = cfg.as_report_entries()
    entries.update(extra)

    result = _run_background(grid, cfg)
    resid = residual(grid, result)
    write_grid(result.background, out / "background.pfm")
    write_grid(resid, out / "residual.pfm")
    _write_trace(out / "trace.txt", result)
    entries.update({
        "background.iterations": result.iterations,
        "background.converged": str(result.converged).lower(),
        "background.max_diff_final": result.max_diffs[-1],
        "outputs.background": str(out / "background.pfm"),
        "outputs.residual": str(out / "residual.pfm"),
        "outputs.trace": str(out / "trace.txt"),
    })

    mask, seg_entries = _segment_one(resid if cfg.source == "residual" else grid, cfg, cfg.source)
    entries.update(seg_entries)
    _write_labels_csv(mask, out / "labels.csv")
    binary = mask if mask.k == 2 else top_class_mask(mask)
    write_mask(binary, out / "mask.pgm")
    entries["outputs.labels"] = str(out / "labels.csv")
    entries["outputs.mask"] = str(out / "mask.pgm")

    if cfg.render:
        inroi = grid.roi_mask()
        shared = RenderSpec(vmin=float(grid.values[inroi].min()),
                            vmax=float(grid.values[inroi].max()))
        render(grid, shared, out / "input.ppm")
        render(result.background, shared, out / "background.ppm")
        render(resid, RenderSpec(), out / "residual.ppm")
        if mask.k in (2, 3):
            _render_condition(mask, out / "condition.ppm")

    if truth is not None:
        # Four-way comparison: raw/residual x threshold/k-means.  The
        # residual threshold defaults to h; raw grids have no default, so
        # unless tau_raw is given the best of 50 evenly spaced thresholds
        # (scored against the truth) is used and recorded.
        tau_res = cfg.default_tau("residual")
        entries["eval.residual_threshold.tau"] = tau_res
        entries.update(_report_metrics(
            "eval.residual_threshold", evaluate(threshold_segment(resid, tau_res), truth)
        ))
        if cfg.tau_raw is not None:
            tau_raw = cfg.tau_raw
            entries["eval.raw_threshold.tau_source"] = "config"
        else:
            tau_raw, _ = best_threshold_by_grid_search(grid, truth)
            entries["eval.raw_threshold.tau_source"] = "grid-search-50"
        entries["eval.raw_threshold.tau"] = tau_raw
        entries.update(_report_metrics(
            "eval.raw_threshold", evaluate(threshold_segment(grid, tau_raw), truth)
        ))
        for name, source_grid in (("raw_kmeans", grid), ("residual_kmeans", resid)):
            kmask = kmeans_segment(source_grid, cfg.k, cfg.kmeans_tol, cfg.kmeans_max_iter)
            entries[f"eval.{name}.k"] = cfg.k
            entries.update(_report_metrics(f"eval.{name}", evaluate(top_class_mask(kmask), truth)))

    write_report(out / "report.txt", "pipeline", entries)
    print(f"pipeline report written to {out / 'report.txt'}")
    if cfg.strict and not result.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_eval(args) -> int:
    pred = read_mask(Path(args.pred))
    truth = read_mask(Path(args.truth))
    roi_mask = None
    if args.roi:
        rect = _parse_roi("--roi", args.roi)
        if rect is not None:
            roi_mask = rect.as_mask(pred.height, pred.width)
    pred = _mask_with_roi(pred, roi_mask)
    truth = _mask_with_roi(truth, roi_mask)
    report = evaluate(pred, truth)
    entries = {
        "eval.pred": str(args.pred),
        "eval.truth": str(args.truth),
        "eval.roi": args.roi or "none",
    }
    entries.update(_report_metrics("eval", report))
    for key in sorted(entries):
        print(f"{key} = {entries[key]!r}" if isinstance(entries[key], float)
              else f"{key} = {entries[key]}")
    if args.out:
        write_report(Path(args.out), "eval", entries)
    return EXIT_OK


def bench_grid(size: int, seed: int = 2024) -> ScalarGrid:
    """Seeded smooth-plus-noise benchmark field."""
    rng = np.random.default_rng(seed)
    r, c = np.mgrid[0:size, 0:size].astype(np.float64)
    smooth = 0.8 * (np.sin(r / 200.0) + np.cos(c / 170.0)) + 1.5 * (r + c) / (2 * size)
    return ScalarGrid(27.0 + smooth + rng.normal(0.0, 0.05, (size, size)))


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    reps = args.repetitions
    entries: dict[str, object] = {"bench.repetitions": reps, "bench.seed": args.seed}
    print(f"{'size':>6} {'naive_s':>10} {'queue_s':>10} {'speedup':>8}")
    for size in sizes:
        grid = bench_grid(size, args.seed)
        marker = ScalarGrid(grid.values - 0.5, grid.roi)
        se = StructuringElement.eight()
        # warm-up excludes jit compilation from the timings
        reconstruct_by_dilation(marker, grid, se, ReconstructionMethod.QUEUE)
        timings = {}
        for method in (ReconstructionMethod.NAIVE, ReconstructionMethod.QUEUE):
            runs = []
            for _ in range(reps):
                t0 = time.perf_counter()
                reconstruct_by_dilation(marker, grid, se, method)
                runs.append(time.perf_counter() - t0)
            timings[method] = sorted(runs)[len(runs) // 2]
        naive_s = timings[ReconstructionMethod.NAIVE]
        queue_s = timings[ReconstructionMethod.QUEUE]
        speedup = naive_s / queue_s if queue_s > 0 else float("inf")
        entries[f"bench.{size}.naive_s"] = naive_s
        entries[f"bench.{size}.queue_s"] = queue_s
        entries[f"bench.{size}.speedup"] = speedup
        print(f"{size:>6} {naive_s:>10.4f} {queue_s:>10.4f} {speedup:>8.1f}")
    if args.out:
        write_report(Path(args.out), "bench", entries)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermomorph",
        description="Background suppression and anomaly segmentation for scalar-field images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--spec", required=True, help="scene spec file (key = value)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--render", action="store_true", help="also write a color render")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("background", help="estimate background and residual")
    p.add_argument("--config", required=True, help="run config file (key = value)")
    p.add_argument("--strict", action="store_true",
                   help="exit 4 when the loop hits max_iterations without converging")
    p.set_defaults(func=cmd_background)

    p = sub.add_parser("segment", help="threshold or k-means segmentation of a grid")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("pipeline", help="background + segmentation + evaluation")
    p.add_argument("--config", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("eval", help="score a predicted mask against a truth mask")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--roi", default=None, help="top,left,height,width")
    p.add_argument("--out", default=None, help="also write a report file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time naive vs queue reconstruction")
    p.add_argument("--sizes", default="128,256", help="comma-separated grid sizes")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ThermomorphError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
