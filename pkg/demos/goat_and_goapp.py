"""Training with occlusion masks, then filling occluded pixels.

Both runs start from block matching and optimise the disparity per pixel.
One keeps every pixel in the loss; the other recomputes the occlusion mask
each epoch and drops the occluded pixels.  The masked result is then
post-processed, which rewrites occluded pixels from the background next to
them and leaves every visible pixel untouched.

    python3 demos/goat_and_goapp.py [seed]
"""
import sys

import numpy as np

from occstereo import GoatConfig, LossParams, goapp, goat_optimize, render
from occstereo.synth import random_scene

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 300
scene = render(random_scene(np.random.default_rng(seed), contrast=0.6, margin=12), seed=0)
occ = scene.gt_mask.occluded


def occluded_epe(d):
    return np.abs(d.data[occ] - scene.gt_disp.data[occ]).mean()


base = dict(max_disp=16, prior_weight=1.5, loss=LossParams(k=1))
masked, mask, trace = goat_optimize(scene.left, scene.right, GoatConfig(**base),
                                    gt=scene.gt_disp, gt_mask=scene.gt_mask)
frozen, _, _ = goat_optimize(scene.left, scene.right, GoatConfig(update_masks=False, **base))

print(trace.to_text())
filled = goapp(masked, mask)
print(f"occluded EPE  all pixels in the loss  {occluded_epe(frozen):.3f}")
print(f"              masks updated per epoch {occluded_epe(masked):.3f}")
print(f"              ... then post-processed {occluded_epe(filled):.3f}")
assert np.array_equal(filled.data[mask.visible], masked.data[mask.visible])
