"""
Left-image reconstruction by bilinear sampling of the right image.

Sampling coordinates are clamped to the image rectangle; samples that had to
be clamped are reported through ``in_bounds`` so callers can mask them.
"""
from dataclasses import dataclass

import numpy as np

from .imgio import as_disparity


@dataclass
class ReconstructionResult:
    image: np.ndarray      # reconstructed left image
    in_bounds: np.ndarray  # sample column fell inside [0, W-1]
    ddisp: np.ndarray      # d image / d disparity, per pixel


def bilinear_sample(img, x, y):
    """Bilinear interpolation of ``img`` at continuous ``(x, y)``.

    ``x`` and ``y`` may be scalars or arrays of the same shape; coordinates
    outside the image are clamped to its border.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    x = np.clip(np.asarray(x, dtype=np.float64), 0, w - 1)
    y = np.clip(np.asarray(y, dtype=np.float64), 0, h - 1)
    x0 = np.minimum(np.floor(x).astype(np.int64), max(w - 2, 0))
    y0 = np.minimum(np.floor(y).astype(np.int64), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = (1 - fx) * img[y0, x0] + fx * img[y0, x1]
    bottom = (1 - fx) * img[y1, x0] + fx * img[y1, x1]
    out = (1 - fy) * top + fy * bottom
    return out[()] if out.ndim == 0 else out


def reconstruct_left(right, disp):
    """Warp the right image into the left view: ``I~(u, v) = I_r(u - d, v)``.

    Only the horizontal coordinate moves, so each sample is a linear blend of
    two pixels of the same row.  ``ddisp`` is the exact derivative of that
    blend with respect to ``d``; at integer sample positions the slope of the
    segment to the left is used, and clamped samples have zero derivative.
    """
    right = np.asarray(right, dtype=np.float64)
    disp = as_disparity(disp)
    if right.shape != disp.shape:
        raise ValueError(f"shape mismatch: right {right.shape}, disparity {disp.shape}")
    h, w = right.shape
    u = np.arange(w, dtype=np.float64)[None, :]
    x = u - disp.filled(0.0)
    in_bounds = (x >= 0) & (x <= w - 1)

    if w == 1:
        return ReconstructionResult(right.copy(), in_bounds, np.zeros_like(right))

    xc = np.clip(x, 0, w - 1)
    x0 = np.minimum(np.floor(xc).astype(np.int64), w - 2)
    fx = xc - x0
    rows = np.arange(h)[:, None]
    image = (1 - fx) * right[rows, x0] + fx * right[rows, x0 + 1]

    # segment index of the left-limit slope; at x == 0 that is the clamp region
    seg = np.ceil(xc).astype(np.int64) - 1
    inside = (seg >= 0) & (x > 0) & (x <= w - 1)
    seg = np.clip(seg, 0, w - 2)
    slope = right[rows, seg + 1] - right[rows, seg]
    ddisp = np.where(inside, -slope, 0.0)
    return ReconstructionResult(image, in_bounds, ddisp)


def reconstruction_error_map(left, recon):
    """Per-pixel absolute difference ``|I_l - I~_l|``."""
    left = np.asarray(left, dtype=np.float64)
    recon = np.asarray(getattr(recon, "image", recon), dtype=np.float64)
    if left.shape != recon.shape:
        raise ValueError(f"shape mismatch: {left.shape} vs {recon.shape}")
    return np.abs(left - recon)
