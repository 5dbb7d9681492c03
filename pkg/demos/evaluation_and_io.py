"""Scoring a disparity map and moving it through the common file formats.

Writes a PFM and a KITTI 16-bit PNG to a temporary directory, reads them
back and evaluates a noisy prediction against the ground truth, once over
all pixels and once per occlusion class.

    python3 demos/evaluation_and_io.py
"""
import tempfile
from pathlib import Path

import numpy as np

from occstereo import CameraCalib, evaluate, occlusion_mask, read_disparity, render, write_disparity
from occstereo.synth import random_scene

rng = np.random.default_rng(11)
scene = render(random_scene(rng, width=96, height=64, max_disp=40), seed=11)
gt = scene.gt_disp
pred = np.clip(gt.data + rng.normal(0, 1.5, gt.shape), 0, None)

with tempfile.TemporaryDirectory() as tmp:
    for name in ("pred.pfm", "pred.png"):
        path = Path(tmp) / name
        write_disparity(pred, path)
        back = read_disparity(path).data
        print(f"{name}: {path.stat().st_size} bytes, max round-trip error "
              f"{np.abs(back - pred).max():.2e}")

calib = CameraCalib(focal=721.0, baseline=0.54)
print(evaluate(pred, gt, calib).to_text())
mask = occlusion_mask(gt)
for region in ("visible", "occluded"):
    r = evaluate(pred, gt, calib, region_mask=mask, region=region)
    print(f"{region:9s} EPE {r.epe:.3f}  D1 {r.d1_all:.3%}  pixels {r.n_valid}")
