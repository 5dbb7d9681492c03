"""Where do occlusions come from?

A foreground layer sitting in front of a background hides a strip of
background from the right camera.  This script renders such a scene, labels
every left pixel from the disparity map alone and prints one row so the
band next to the layer's left edge is visible as text.

    python3 demos/occlusion_geometry.py
"""
import numpy as np

from occstereo import occlusion_mask, occlusion_mask_bruteforce, render
from occstereo.synth import parse_scene

SCENE = """size 40 12
background disparity=2 texture=noise seed=1 high=0.4
layer x=14 y=2 w=16 h=8 disparity=8 texture=checker period=3 low=0.6
"""

scene = render(parse_scene(SCENE), seed=0)
mask = occlusion_mask(scene.gt_disp)

# the fast sweep and the pairwise definition agree
assert mask == occlusion_mask_bruteforce(scene.gt_disp)
assert mask == scene.gt_mask

row = 5
symbols = {0: ".", 1: "O", 2: "X"}
print("disparity :", " ".join(f"{int(v):d}" for v in scene.gt_disp.data[row]))
print("labels    :", " ".join(symbols[int(l)] for l in mask.labels[row]))
print("(. visible, O occluded, X outside the right view)")

band = np.flatnonzero(mask.occluded[row])
print(f"occluded columns {band.min()}..{band.max()}: {len(band)} px, "
      f"the disparity jump is {8 - 2} px")
print(f"whole image: {mask.occluded.mean():.1%} occluded, {mask.exclusive.mean():.1%} exclusive")
