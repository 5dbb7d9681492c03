import numpy as np
import pytest

from occstereo import cli, geometry, imgio, metrics, synth
from occstereo.goapp import goapp
from occstereo.warp import reconstruct_left

SPEC = """size 48 24
background disparity=1 texture=noise seed=2 high=0.4
layer x=20 y=4 w=14 h=14 disparity=6 texture=noise seed=7 low=0.6
"""


@pytest.fixture
def scene_dir(tmp_path):
    (tmp_path / "scene.txt").write_text(SPEC)
    assert cli.main(["synth", str(tmp_path / "scene.txt"), str(tmp_path / "s"), "--seed", "3"]) == 0
    return tmp_path / "s"


def test_synth_outputs_match_library(scene_dir):
    s = synth.render(synth.parse_scene(SPEC), 3)
    assert np.array_equal(imgio.read_pfm(scene_dir / "disp.pfm").data, s.gt_disp.data)
    assert geometry.read_mask_png(scene_dir / "mask.png") == s.gt_mask
    left = imgio.read_image(scene_dir / "left.pfm")
    assert np.array_equal(left, s.left.astype(np.float32).astype(np.float64))


def test_synth_is_repeatable(tmp_path, scene_dir):
    (tmp_path / "again.txt").write_text(SPEC)
    cli.main(["synth", str(tmp_path / "again.txt"), str(tmp_path / "t"), "--seed", "3"])
    for name in ("left.pfm", "right.pfm", "disp.pfm", "mask.png"):
        assert (scene_dir / name).read_bytes() == (tmp_path / "t" / name).read_bytes()


def test_synth_invalid_spec(tmp_path, capsys):
    (tmp_path / "bad.txt").write_text("size 10 10\nlayer x=0 y=0 w=4 h=4 disparity=0\n")
    assert cli.main(["synth", str(tmp_path / "bad.txt"), str(tmp_path / "o")]) == 2
    assert "disparity" in capsys.readouterr().err


def test_occlusion_matches_ground_truth(scene_dir, tmp_path, capsys):
    out = tmp_path / "m.png"
    assert cli.main(["occlusion", str(scene_dir / "disp.pfm"), str(out)]) == 0
    assert geometry.read_mask_png(out) == geometry.read_mask_png(scene_dir / "mask.png")
    assert "occluded=" in capsys.readouterr().out


def test_missing_file_and_usage(tmp_path, capsys):
    assert cli.main(["occlusion", str(tmp_path / "nope.pfm"), str(tmp_path / "m.png")]) == 2
    assert capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        cli.main(["occlusion"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 1


def test_goapp_matches_library(scene_dir, tmp_path, rng):
    gt = imgio.read_pfm(scene_dir / "disp.pfm")
    noisy = imgio.DisparityMap(gt.data + rng.normal(0, 0.3, gt.shape))
    imgio.write_pfm(noisy, tmp_path / "n.pfm")
    assert cli.main(["goapp", str(tmp_path / "n.pfm"), str(tmp_path / "f.pfm"),
                     "--mask", str(scene_dir / "mask.png")]) == 0
    noisy32 = imgio.read_pfm(tmp_path / "n.pfm")
    expected = goapp(noisy32, geometry.read_mask_png(scene_dir / "mask.png"), 10)
    assert np.array_equal(imgio.read_pfm(tmp_path / "f.pfm").data,
                          expected.data.astype(np.float32).astype(np.float64))


def test_goapp_identity_on_visible_mask(tmp_path, rng):
    d = rng.uniform(0, 5, (4, 6)).astype(np.float32).astype(np.float64)
    imgio.write_pfm(d, tmp_path / "d.pfm")
    geometry.write_mask_png(geometry.OcclusionMask.all_visible(d.shape), tmp_path / "v.png")
    cli.main(["goapp", str(tmp_path / "d.pfm"), str(tmp_path / "o.pfm"), "--mask",
              str(tmp_path / "v.png")])
    assert np.array_equal(imgio.read_pfm(tmp_path / "o.pfm").data, d)


def test_goapp_default_neighbours():
    args = cli.build_parser().parse_args(["goapp", "a.pfm", "b.pfm"])
    assert args.n == 10


def test_evaluate(scene_dir, capsys):
    disp = str(scene_dir / "disp.pfm")
    assert cli.main(["evaluate", disp, disp]) == 0
    out = dict(line.split("=") for line in capsys.readouterr().out.split())
    assert float(out["epe"]) == 0 and float(out["d1_all"]) == 0 and float(out["delta1"]) == 1
    args = cli.build_parser().parse_args(["evaluate", disp, disp])
    assert args.cap == 80.0


def test_evaluate_region_matches_library(scene_dir, tmp_path, capsys, rng):
    gt = imgio.read_pfm(scene_dir / "disp.pfm")
    pred = gt.data + rng.normal(0, 2, gt.shape)
    imgio.write_pfm(pred, tmp_path / "p.pfm")
    capsys.readouterr()
    cli.main(["evaluate", str(tmp_path / "p.pfm"), str(scene_dir / "disp.pfm"),
              "--region", "occluded", "--mask", str(scene_dir / "mask.png")])
    printed = capsys.readouterr().out.strip()
    report = metrics.evaluate(imgio.read_pfm(tmp_path / "p.pfm"), gt,
                              imgio.CameraCalib(721.0, 0.54),
                              region_mask=geometry.read_mask_png(scene_dir / "mask.png"),
                              region="occluded")
    assert printed == report.to_kv()


def test_reconstruct(scene_dir, tmp_path, capsys):
    zero = tmp_path / "z.pfm"
    imgio.write_pfm(np.zeros((24, 48)), zero)
    assert cli.main(["reconstruct", str(scene_dir / "left.pfm"), str(scene_dir / "right.pfm"),
                     str(zero), str(tmp_path / "r.pfm"), str(tmp_path / "e.pfm")]) == 0
    right = imgio.read_image(scene_dir / "right.pfm")
    assert np.array_equal(imgio.read_pfm(tmp_path / "r.pfm").data, right)

    cli.main(["reconstruct", str(scene_dir / "left.pfm"), str(scene_dir / "right.pfm"),
              str(scene_dir / "disp.pfm"), str(tmp_path / "r2.pfm"), str(tmp_path / "e2.pfm")])
    err = imgio.read_pfm(tmp_path / "e2.pfm").data
    mask = geometry.read_mask_png(scene_dir / "mask.png")
    assert np.all(err[mask.visible] == 0)
    assert err[~mask.visible].mean() > 0
    left = imgio.read_image(scene_dir / "left.pfm")
    rec = reconstruct_left(right, imgio.read_pfm(scene_dir / "disp.pfm")).image
    assert np.array_equal(imgio.read_pfm(tmp_path / "r2.pfm").data,
                          rec.astype(np.float32).astype(np.float64))
    assert left.shape == rec.shape


def test_goat_zero_steps_and_repeatable(scene_dir, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"epochs": 1, "steps_per_epoch": 0, "max_disp": 8, "loss": {"k": 1}}')
    base = ["goat", str(scene_dir / "left.pfm"), str(scene_dir / "right.pfm")]
    assert cli.main(base + [str(tmp_path / "d.pfm"), str(tmp_path / "m.png"),
                            str(tmp_path / "t.txt"), "--config", str(cfg)]) == 0
    left, right = imgio.read_image(scene_dir / "left.pfm"), imgio.read_image(scene_dir / "right.pfm")
    from occstereo.goat import block_match
    assert np.array_equal(imgio.read_pfm(tmp_path / "d.pfm").data, block_match(left, right, 8))

    cfg.write_text('{"epochs": 2, "steps_per_epoch": 3, "max_disp": 8, "loss": {"k": 1}}')
    outs = []
    for tag in "ab":
        cli.main(base + [str(tmp_path / f"{tag}.pfm"), str(tmp_path / f"{tag}.png"),
                         str(tmp_path / f"{tag}.txt"), "--config", str(cfg),
                         "--gt", str(scene_dir / "disp.pfm")])
        outs.append((tmp_path / f"{tag}.pfm").read_bytes())
    assert outs[0] == outs[1]
    lines = (tmp_path / "a.txt").read_text().splitlines()
    assert lines[0].split("\t")[:4] == ["epoch", "loss_start", "loss", "masked_fraction"]
    assert len(lines) == 3 and all(len(l.split("\t")) == 6 for l in lines)


def test_goat_bad_config(scene_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"epochs": 1, "colour": 3}')
    assert cli.main(["goat", str(scene_dir / "left.pfm"), str(scene_dir / "right.pfm"),
                     str(tmp_path / "d.pfm"), str(tmp_path / "m.png"), str(tmp_path / "t.txt"),
                     "--config", str(cfg)]) == 2


def test_stats_matches_library(scene_dir, tmp_path, capsys, rng):
    gt = imgio.read_pfm(scene_dir / "disp.pfm")
    imgio.write_pfm(gt.data + rng.normal(0, 1, gt.shape), tmp_path / "p.pfm")
    capsys.readouterr()
    assert cli.main(["stats", str(tmp_path / "p.pfm"), str(scene_dir / "disp.pfm")]) == 0
    out = dict(line.split("=") for line in capsys.readouterr().out.split())
    s = geometry.occlusion_stats(imgio.read_pfm(tmp_path / "p.pfm"), gt, geometry.occlusion_mask(gt))
    assert float(out["mean_error_occluded"]) == pytest.approx(s.mean_error_occluded, abs=1e-6)
    assert float(out["area_share_occluded"]) + float(out["area_share_visible"]) == pytest.approx(1)
