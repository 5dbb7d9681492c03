"""Occlusion geometry, occlusion-aware losses and post-processing for rectified stereo."""
from .geometry import (
    Label,
    OcclusionMask,
    OcclusionStats,
    disparity_to_depth,
    occlusion_mask,
    occlusion_mask_bruteforce,
    occlusion_stats,
)
from .goapp import goapp
from .goat import GoatConfig, GoatTrace, goat_optimize, init_disparity
from .imgio import CameraCalib, DisparityMap, read_disparity, write_disparity
from .loss import LossParams, total_loss
from .metrics import EvalReport, evaluate
from .synth import SceneSpec, random_scene, render
from .warp import reconstruct_left

__version__ = "0.1.0"

__all__ = [
    "CameraCalib", "DisparityMap", "EvalReport", "GoatConfig", "GoatTrace", "Label",
    "LossParams", "OcclusionMask", "OcclusionStats", "SceneSpec", "disparity_to_depth",
    "evaluate", "goapp", "goat_optimize", "init_disparity", "occlusion_mask",
    "occlusion_mask_bruteforce", "occlusion_stats", "random_scene", "read_disparity",
    "reconstruct_left", "render", "total_loss", "write_disparity",
]
