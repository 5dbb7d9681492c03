"""Why mask the photometric loss?

Warping the right image with the true disparity reproduces every visible
left pixel, but occluded pixels get the colour of the occluder.  The
photometric loss therefore punishes the correct disparity there, and the
occlusion mask removes exactly those pixels from the average.

    python3 demos/reconstruction_and_loss.py
"""
import numpy as np

from occstereo import LossParams, occlusion_mask, reconstruct_left, render, total_loss
from occstereo.synth import random_scene

scene = render(random_scene(np.random.default_rng(5), contrast=0.6, margin=12), seed=5)
mask = occlusion_mask(scene.gt_disp)

recon = reconstruct_left(scene.right, scene.gt_disp).image
err = np.abs(scene.left - recon)
print(f"|I - I~| with the true disparity: visible {err[mask.visible].mean():.4f}, "
      f"occluded {err[mask.occluded].mean():.4f}")

params = LossParams(k=1)
shifted = scene.gt_disp.data + 1.0
for name, d in (("true disparity", scene.gt_disp.data), ("true + 1 px", shifted)):
    unmasked = total_loss(d, scene.left, scene.right, None, params).total
    masked = total_loss(d, scene.left, scene.right, mask, params).total
    print(f"{name:15s} loss on all pixels {unmasked:.4f}, on visible pixels {masked:.4f}")

field = total_loss(scene.gt_disp, scene.left, scene.right, None, params)
occ_pull = np.abs(field.grad[mask.occluded]).mean()
vis_pull = np.abs(field.grad[mask.visible]).mean()
print(f"mean |dC/dd| at the true disparity: occluded {occ_pull:.2e}, visible {vis_pull:.2e}")
