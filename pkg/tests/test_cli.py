import json

import numpy as np
import pytest

from ewwt import imageio
from ewwt.cli import main
from ewwt.synthetic import make_texture


@pytest.fixture
def texture_png(tmp_path):
    path = tmp_path / "tex.png"
    imageio.write_image(path, make_texture((64, 64), 0), sidecar=False)
    return path


def test_decompose_reconstruct(tmp_path, texture_png, capsys):
    run = tmp_path / "run"
    assert main(["decompose", str(texture_png), "--out", str(run), "--spectrum"]) == 0
    summary = json.loads(capsys.readouterr().out)
    manifest = json.loads((run / "manifest.json").read_text())
    assert manifest["n_planes"] == summary["n_filters"]
    for name in ("partition.pgm", "partition.json", "filters.json", "tracks.csv", "spectrum.c128"):
        assert (run / name).exists()
    assert len(list(run.glob("coef_*.f64"))) == manifest["n_planes"]

    rec = tmp_path / "rec.png"
    assert main(["reconstruct", str(run), "--out", str(rec)]) == 0
    src = imageio.read_image(texture_png)
    assert np.max(np.abs(imageio.read_image(rec) - src)) < 1 / 255
    assert np.max(np.abs(imageio.read_image(rec.with_suffix(".f64")) - src)) < 1e-9


def test_partition_and_filters(tmp_path, texture_png):
    assert main(["partition", str(texture_png), "--out", str(tmp_path / "p")]) == 0
    meta = json.loads((tmp_path / "p" / "partition.json").read_text())
    assert meta["paired"] and meta["n_regions"] >= 1
    assert main(["filters", str(texture_png), "--tau", "0.2", "--out", str(tmp_path / "f")]) == 0
    assert json.loads((tmp_path / "f" / "filters.json").read_text())["tau"] == 0.2


def test_blur_and_deconvolve(tmp_path, texture_png):
    blurred = tmp_path / "blur.png"
    assert main(["blur", str(texture_png), "--kernel", "gaussian:2", "--out", str(blurred)]) == 0
    out = tmp_path / "deb.png"
    code = main(
        ["deconvolve", str(blurred.with_suffix(".f64")), "--kernel", "gaussian:2", "--max-iter", "20",
         "--ref", str(texture_png), "--out", str(out)]
    )
    assert code == 0
    report = json.loads((tmp_path / "deb.report.json").read_text())
    assert report["iterations"] <= 20 and report["ssim_vs_ref"] > 0
    assert set(report) >= {"iterations", "final_rel_change", "ssim_vs_ref"}


def test_toy_command(tmp_path):
    out = tmp_path / "toy.png"
    assert main(["toy", "--seed", "2", "--out", str(out)]) == 0
    meta = json.loads((tmp_path / "toy.manifest.json").read_text())
    assert len(meta["carriers_cycles_per_side"]) == 4


def test_exit_codes(tmp_path, texture_png, capsys):
    assert main(["decompose", str(tmp_path / "nope.png"), "--out", str(tmp_path / "r")]) == 6
    assert "nope.png" in capsys.readouterr().err
    assert main(["partition", str(texture_png), "--edge-exclusion", "40", "--out", str(tmp_path / "r")]) == 2
    assert main(["deconvolve", str(texture_png), "--kernel", "box:3", "--out", str(tmp_path / "d.png")]) == 2
    # a zero image has no spectral maxima at all
    zero = tmp_path / "zero.png"
    imageio.write_image(zero, np.zeros((16, 16)), sidecar=False)
    assert main(["partition", str(zero), "--out", str(tmp_path / "z")]) == 3
    with pytest.raises(SystemExit) as info:
        main(["decompose", str(texture_png), "--tau", "-1", "--out", str(tmp_path / "x")])
    assert info.value.code == 2
    assert main(["reconstruct", str(tmp_path / "missing_run"), "--out", str(tmp_path / "y.png")]) == 6
