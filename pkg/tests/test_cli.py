import csv
import subprocess
import sys

import numpy as np
import pytest

from fcmvessel import cli, imageio
from fcmvessel.phantom import make_phantom

FAST = ["--median-window", "15", "--min-component-px", "5", "--tile-cols", "4", "--tile-rows", "4"]


@pytest.fixture
def phantom_files(tmp_path):
    files = []
    for seed in (1, 2, 3):
        img, truth = tmp_path / f"img{seed}.png", tmp_path / f"gt{seed}.png"
        assert cli.main(["phantom", "--seed", str(seed), "--width", "72", "--height", "64",
                         "--image", str(img), "--truth", str(truth)]) == 0
        files.append((img, truth))
    return files


def test_phantom_deterministic(tmp_path):
    for name in ("a", "b"):
        cli.main(["phantom", "--seed", "5", "--image", str(tmp_path / f"{name}.png"),
                  "--truth", str(tmp_path / f"{name}_gt.png")])
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
    assert (tmp_path / "a_gt.png").read_bytes() == (tmp_path / "b_gt.png").read_bytes()
    mask = imageio.load_mask(tmp_path / "a_gt.png")
    assert mask.any() and mask.shape == (256, 256)


def test_phantom_generator_contract():
    img, mask = make_phantom(seed=4, width=50, height=40)
    assert img.shape == (40, 50, 3) and img.dtype == np.uint8
    assert mask.shape == (40, 50) and mask.any() and not mask.all()
    # vessels are darker than the background in the green channel
    g = img[:, :, 1].astype(float)
    assert g[mask].mean() < g[~mask].mean()
    img2, mask2 = make_phantom(seed=4, width=50, height=40)
    np.testing.assert_array_equal(img, img2)
    np.testing.assert_array_equal(mask, mask2)


def test_segment_happy_path(tmp_path, phantom_files, capsys):
    img, _ = phantom_files[0]
    out, ov, fig = tmp_path / "m.png", tmp_path / "ov.png", tmp_path / "fig.png"
    code = cli.main(["segment", str(img), "-o", str(out), "--overlay", str(ov),
                     "--figure", str(fig), *FAST])
    assert code == 0
    assert out.exists() and ov.exists() and fig.exists()
    text = capsys.readouterr().out
    assert "iterations:" in text and "converged:" in text and "objective:" in text


def test_segment_byte_identical(tmp_path, phantom_files):
    img, _ = phantom_files[0]
    for name in ("a.png", "b.png"):
        assert cli.main(["segment", str(img), "-o", str(tmp_path / name), "--seed", "7", *FAST]) == 0
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_segment_missing_input(tmp_path, capsys):
    missing = tmp_path / "nope.png"
    assert cli.main(["segment", str(missing), "-o", str(tmp_path / "m.png")]) == 1
    assert "nope.png" in capsys.readouterr().err


def test_segment_bad_config_value(tmp_path, phantom_files):
    img, _ = phantom_files[0]
    assert cli.main(["segment", str(img), "-o", str(tmp_path / "m.png"),
                     "--median-window", "4"]) == 1


def test_segment_pipeline_error_exit_code(tmp_path, phantom_files):
    img, _ = phantom_files[0]
    fov = tmp_path / "fov.png"
    imageio.save_mask(np.ones((5, 5), bool), fov)
    code = cli.main(["segment", str(img), "-o", str(tmp_path / "m.png"), "--fov", str(fov), *FAST])
    assert code == 2


def test_config_file_and_env(tmp_path, phantom_files, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small images\nmedian_window = 15\nmin_component_px=5\n"
                   "tile_cols = 4\ntile_rows = 4\nseed = 3\n")
    args = cli.build_parser().parse_args(["segment", "x.png", "-o", "m.png", "--config", str(cfg),
                                          "--seed", "11"])
    settings = cli.resolve_settings(args)
    assert settings["median_window"] == 15 and settings["seed"] == 11
    assert settings["clusters"] == 2 and settings["epsilon"] == 1e-5

    monkeypatch.setenv(cli.CONFIG_ENV, str(cfg))
    args = cli.build_parser().parse_args(["segment", "x.png", "-o", "m.png"])
    assert cli.resolve_settings(args)["seed"] == 3

    img, _ = phantom_files[0]
    assert cli.main(["segment", str(img), "-o", str(tmp_path / "m.png")]) == 0


def test_config_defaults_documented():
    args = cli.build_parser().parse_args(["segment", "x.png", "-o", "m.png"])
    cfg = cli.build_pipeline_config(cli.resolve_settings(args))
    assert (cfg.fcm.c, cfg.fcm.m, cfg.fcm.epsilon, cfg.fcm.max_iter) == (2, 2.0, 1e-5, 100)
    assert cfg.median_window == 75 and cfg.min_component_px == 30
    assert (cfg.clahe.tile_cols, cfg.clahe.tile_rows, cfg.clahe.bins, cfg.clahe.clip_limit) == (8, 8, 256, 4.0)


def test_config_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(cli.ConfigError):
        cli.read_config(cfg)


def _write_manifest(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return path


def test_evaluate_three_pairs(tmp_path, phantom_files, capsys):
    manifest = _write_manifest(tmp_path / "m.csv", [f"{i.name}, {t.name}" for i, t in phantom_files])
    report = tmp_path / "report.csv"
    figs = tmp_path / "figs"
    assert cli.main(["evaluate", str(manifest), "--report", str(report),
                     "--figures", str(figs), *FAST]) == 0
    with open(report) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["image"] for r in rows] == [str(i) for i, _ in phantom_files] + ["average", "pooled"]
    assert (tmp_path / "report.txt").read_text().count("\n") >= 6
    assert "Average" in capsys.readouterr().out
    assert sorted(p.name for p in figs.iterdir()) == [
        "img1_eval.png", "img2_eval.png", "img3_eval.png", "summary.png"]

    # rows equal single-image segment runs scored independently
    for (img, truth), row in zip(phantom_files, rows):
        mask = tmp_path / f"{img.stem}_mask.png"
        cli.main(["segment", str(img), "-o", str(mask), *FAST])
        pred, gt = imageio.load_mask(mask), imageio.load_mask(truth)
        assert int(row["tp"]) == int((pred & gt).sum())
        assert int(row["fp"]) == int((pred & ~gt).sum())


def test_evaluate_empty_manifest(tmp_path, capsys):
    manifest = _write_manifest(tmp_path / "m.csv", ["# nothing here"])
    report = tmp_path / "r.csv"
    assert cli.main(["evaluate", str(manifest), "--report", str(report)]) == 0
    assert report.read_text().splitlines() == [",".join(cli_columns())]
    assert "warning" in capsys.readouterr().err


def cli_columns():
    from fcmvessel.metrics import CSV_COLUMNS
    return CSV_COLUMNS


def test_evaluate_bad_row_isolated(tmp_path, phantom_files):
    lines = [f"{i.name},{t.name}" for i, t in phantom_files]
    lines.insert(1, f"missing.png,{phantom_files[0][1].name}")
    manifest = _write_manifest(tmp_path / "m.csv", lines)
    report = tmp_path / "r.csv"
    assert cli.main(["evaluate", str(manifest), "--report", str(report), *FAST]) == 0
    with open(report) as fh:
        rows = list(csv.DictReader(fh))
    assert rows[1]["status"].startswith("failed")
    assert all(r["status"] == "ok" for r in (rows[0], rows[2], rows[3]))


def test_evaluate_with_fov_column(tmp_path, phantom_files):
    img, truth = phantom_files[0]
    fov = np.zeros((64, 72), bool)
    fov[8:56, 8:64] = True
    imageio.save_mask(fov, tmp_path / "fov.png")
    manifest = _write_manifest(tmp_path / "m.csv", [f"{img.name},{truth.name},fov.png"])
    report = tmp_path / "r.csv"
    assert cli.main(["evaluate", str(manifest), "--report", str(report), *FAST]) == 0
    with open(report) as fh:
        row = next(csv.DictReader(fh))
    assert sum(int(row[k]) for k in ("tp", "fp", "fn", "tn")) == fov.sum()


def test_evaluate_unreadable_manifest(tmp_path):
    assert cli.main(["evaluate", str(tmp_path / "none.csv"), "--report", str(tmp_path / "r.csv")]) == 1


def test_evaluate_malformed_manifest(tmp_path):
    manifest = _write_manifest(tmp_path / "m.csv", ["only-one-column.png"])
    assert cli.main(["evaluate", str(manifest), "--report", str(tmp_path / "r.csv")]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fcmvessel", "phantom", "--width", "16",
                           "--height", "16", "--image", str(tmp_path / "i.png"),
                           "--truth", str(tmp_path / "t.png")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "i.png").exists()
