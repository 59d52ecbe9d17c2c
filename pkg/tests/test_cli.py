import numpy as np
import pytest

from thermomorph import read_grid, read_mask
from thermomorph.cli import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    RunConfig,
    main,
    read_report,
    scene_spec_from_file,
)
from thermomorph.errors import ConfigError


def write_scene_spec(path, **overrides):
    lines = {
        "width": 96, "height": 72, "bg_min": 26.0, "bg_max": 27.5,
        "noise_sigma": 0.02, "seed": 11, "roi": "4,0,64,96",
        "hot_band_rows": 4, "shadow_rows": 4,
        "blob1": "30,30,10,2.5", "blob2": "44,70,8,1.5",
    }
    lines.update(overrides)
    path.write_text("".join(f"{k} = {v}\n" for k, v in lines.items()))
    return path


def write_run_config(path, scene, out_dir, **overrides):
    lines = {
        "scene": scene, "out_dir": out_dir, "h": 0.5, "max_iterations": 6,
        "segmentation": "threshold",
    }
    lines.update(overrides)
    path.write_text("".join(f"{k} = {v}\n" for k, v in lines.items()))
    return path


@pytest.fixture
def scene_file(tmp_path):
    return write_scene_spec(tmp_path / "scene.cfg")


def test_unknown_config_key_is_exit_2(tmp_path, scene_file, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"scene = {scene_file}\nout_dir = {tmp_path / 'o'}\ntypo_key = 1\n")
    assert main(["pipeline", "--config", str(cfg)]) == EXIT_CONFIG
    assert "typo_key" in capsys.readouterr().err


def test_duplicate_and_malformed_keys_rejected(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("h = 1\nh = 2\n")
    with pytest.raises(ConfigError):
        RunConfig.from_file(bad)
    bad.write_text("just a line\n")
    with pytest.raises(ConfigError):
        RunConfig.from_file(bad)


def test_missing_input_and_scene_rejected(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("h = 0.5\n")
    with pytest.raises(ConfigError):
        RunConfig.from_file(cfg)


def test_missing_input_file_is_exit_3(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"input = {tmp_path / 'nope.pfm'}\nout_dir = {tmp_path / 'o'}\n")
    assert main(["background", "--config", str(cfg)]) == EXIT_DATA


def test_synth_writes_scene_truth_clean(tmp_path, scene_file):
    out = tmp_path / "synth_out"
    assert main(["synth", "--spec", str(scene_file), "--out", str(out), "--render"]) == EXIT_OK
    grid = read_grid(out / "scene.pfm")
    clean = read_grid(out / "clean_background.pfm")
    truth = read_mask(out / "truth.pgm")
    assert grid.shape == (72, 96) == clean.shape == truth.shape
    assert truth.foreground().any()
    assert (out / "scene.ppm").exists()
    report = read_report(out / "report.txt")
    assert report["schema"] == "thermomorph.report/1"
    assert report["scene.seed"] == "11"


def test_scene_spec_blobs_none(tmp_path):
    spec = write_scene_spec(tmp_path / "s.cfg")
    spec.write_text(spec.read_text().replace("blob1 = 30,30,10,2.5\n", "").replace(
        "blob2 = 44,70,8,1.5\n", "blobs = none\n"))
    parsed = scene_spec_from_file(spec)
    assert parsed.blobs == ()


def test_background_command_outputs_and_strict_exit(tmp_path, scene_file):
    out = tmp_path / "bg_out"
    cfg = write_run_config(tmp_path / "run.cfg", scene_file, out, max_iterations=1,
                           snapshots="true", render="true")
    assert main(["background", "--config", str(cfg)]) == EXIT_OK
    report = read_report(out / "report.txt")
    assert report["background.converged"] == "false"
    assert report["background.iterations"] == "1"
    trace = (out / "trace.txt").read_text().strip().splitlines()
    assert len(trace) == 1 and trace[0].startswith("1 ")
    assert (out / "background.pfm").exists()
    assert (out / "residual.pfm").exists()
    assert (out / "background_pass_001.pfm").exists()
    assert (out / "background_pass_001.ppm").exists()
    # residual must be non-negative and zero outside the ROI
    resid = read_grid(out / "residual.pfm")
    assert float(resid.values.min()) >= 0.0
    # strict flag turns the same non-converged run into exit 4
    assert main(["background", "--config", str(cfg), "--strict"]) == EXIT_NOT_CONVERGED


def test_pipeline_report_contains_four_way_ious(tmp_path, scene_file):
    out = tmp_path / "pipe_out"
    cfg = write_run_config(tmp_path / "run.cfg", scene_file, out)
    assert main(["pipeline", "--config", str(cfg)]) == EXIT_OK
    report = read_report(out / "report.txt")
    for prefix in ("eval.raw_threshold", "eval.residual_threshold",
                   "eval.raw_kmeans", "eval.residual_kmeans"):
        assert f"{prefix}.iou" in report, prefix
        assert 0.0 <= float(report[f"{prefix}.iou"]) <= 1.0
    # full effective config is echoed
    assert report["config.h"] == "0.5"
    assert report["config.max_iterations"] == "6"
    assert report["config.method"] == "queue"
    assert report["scene.seed"] == "11"
    # residual threshold defaults to h; raw tau comes from the grid search
    assert float(report["eval.residual_threshold.tau"]) == 0.5
    assert report["eval.raw_threshold.tau_source"] == "grid-search-50"
    assert (out / "mask.pgm").exists()
    assert (out / "labels.csv").exists()


def test_pipeline_is_bit_reproducible(tmp_path, scene_file):
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    cfg1 = write_run_config(tmp_path / "r1.cfg", scene_file, out1)
    cfg2 = write_run_config(tmp_path / "r2.cfg", scene_file, out2)
    assert main(["pipeline", "--config", str(cfg1)]) == EXIT_OK
    assert main(["pipeline", "--config", str(cfg2)]) == EXIT_OK
    for name in ("background.pfm", "residual.pfm", "mask.pgm", "labels.csv", "trace.txt"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    r1 = (out1 / "report.txt").read_text().replace(str(out1), "OUT")
    r2 = (out2 / "report.txt").read_text().replace(str(out2), "OUT")
    assert r1 == r2


def test_pipeline_kmeans_branch(tmp_path, scene_file):
    out = tmp_path / "pipe_k"
    cfg = write_run_config(tmp_path / "runk.cfg", scene_file, out,
                           segmentation="kmeans", k=3, render="true")
    assert main(["pipeline", "--config", str(cfg)]) == EXIT_OK
    report = read_report(out / "report.txt")
    assert report["segment.k"] == "3"
    assert (out / "condition.ppm").exists()
    labels = np.loadtxt(out / "labels.csv", delimiter=",", dtype=int)
    assert labels.max() == 2


def test_segment_raw_threshold_requires_tau(tmp_path, scene_file):
    out = tmp_path / "seg_out"
    cfg = write_run_config(tmp_path / "rs.cfg", scene_file, out, source="raw")
    assert main(["segment", "--config", str(cfg)]) == EXIT_CONFIG
    cfg2 = write_run_config(tmp_path / "rs2.cfg", scene_file, out,
                            source="raw", tau=27.8)
    assert main(["segment", "--config", str(cfg2)]) == EXIT_OK
    report = read_report(out / "report.txt")
    assert float(report["segment.tau"]) == 27.8


def test_eval_identical_masks_give_iou_one(tmp_path, scene_file, capsys):
    out = tmp_path / "s"
    assert main(["synth", "--spec", str(scene_file), "--out", str(out)]) == EXIT_OK
    report_path = tmp_path / "eval.txt"
    code = main(["eval", "--pred", str(out / "truth.pgm"),
                 "--truth", str(out / "truth.pgm"), "--out", str(report_path)])
    assert code == EXIT_OK
    report = read_report(report_path)
    assert float(report["eval.iou"]) == 1.0
    assert "eval.iou = 1.0" in capsys.readouterr().out


def test_eval_shape_mismatch_is_exit_3(tmp_path, scene_file):
    out = tmp_path / "s"
    main(["synth", "--spec", str(scene_file), "--out", str(out)])
    small = write_scene_spec(tmp_path / "small.cfg", width=40, height=30,
                             roi="0,0,30,40", blob1="15,15,6,2.0",
                             blob2="20,30,5,1.0")
    out2 = tmp_path / "s2"
    main(["synth", "--spec", str(small), "--out", str(out2)])
    code = main(["eval", "--pred", str(out / "truth.pgm"),
                 "--truth", str(out2 / "truth.pgm")])
    assert code == EXIT_DATA


def test_bench_smoke(tmp_path, capsys):
    report_path = tmp_path / "bench.txt"
    assert main(["bench", "--sizes", "48", "--repetitions", "1",
                 "--out", str(report_path)]) == EXIT_OK
    report = read_report(report_path)
    assert "bench.48.naive_s" in report
    assert "bench.48.speedup" in report
    assert "speedup" in capsys.readouterr().out
