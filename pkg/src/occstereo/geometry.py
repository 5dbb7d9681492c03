"""
Occlusion geometry of a rectified stereo pair, from the left disparity alone.

For a left pixel ``(u, v)`` with disparity ``d`` the matching right pixel is
``(u - d, v)``.  Two left pixels landing on the same right pixel cannot both
be seen by the right camera: the one further right (larger ``u``, hence
larger disparity, hence nearer) hides the other.  A pixel whose target
``u - d`` is negative falls outside the right camera's field of view
altogether.

Exact equality of real-valued targets almost never happens, so targets are
quantised into bins of width ``bin_tolerance`` (``round(t / tol)``) and a
shared bin counts as a collision.  With the default of 1 px this reproduces
integer-disparity behaviour exactly.
"""
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from PIL import Image

from .imgio import DisparityMap, as_disparity

DEFAULT_DEPTH_CAP = 80.0


class Label(IntEnum):
    VISIBLE = 0
    OCCLUDED = 1
    EXCLUSIVE = 2


@dataclass
class OcclusionMask:
    """Per-pixel tri-state occlusion labels.

    ``valid`` follows the disparity the mask was derived from; invalid pixels
    carry ``Label.VISIBLE`` in ``labels`` but are 0 in :attr:`binary`.
    """

    labels: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.valid is None:
            self.valid = np.ones(self.labels.shape, dtype=bool)
        self.valid = np.asarray(self.valid, dtype=bool)

    @classmethod
    def all_visible(cls, shape):
        return cls(np.zeros(shape, dtype=np.int8))

    @property
    def shape(self):
        return self.labels.shape

    @property
    def binary(self):
        """Loss mask M: 1 on valid visible pixels, 0 elsewhere."""
        return ((self.labels == Label.VISIBLE) & self.valid).astype(np.float64)

    @property
    def visible(self):
        return (self.labels == Label.VISIBLE) & self.valid

    @property
    def occluded(self):
        return (self.labels == Label.OCCLUDED) & self.valid

    @property
    def exclusive(self):
        return (self.labels == Label.EXCLUSIVE) & self.valid

    def __eq__(self, other):
        if not isinstance(other, OcclusionMask):
            return NotImplemented
        return (self.shape == other.shape
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.valid, other.valid))


def target_bins(data, bin_tolerance):
    """Quantised right-image column ``round((u - d) / tol)`` for every pixel."""
    if bin_tolerance <= 0:
        raise ValueError("bin_tolerance must be positive")
    u = np.arange(data.shape[1], dtype=np.float64)
    return np.floor((u - data) / bin_tolerance + 0.5).astype(np.int64)


def occlusion_mask_bruteforce(disp, bin_tolerance=1.0):
    """Reference labelling: compares every pixel pair in each row, O(W^2)."""
    disp = as_disparity(disp)
    h, w = disp.shape
    data = disp.filled(0.0)
    labels = np.zeros((h, w), dtype=np.int8)
    bins = target_bins(data, bin_tolerance) if data.size else np.zeros((h, w), np.int64)
    for v in range(h):
        for u1 in range(w):
            if not disp.valid[v, u1]:
                continue
            if data[v, u1] - u1 > 0:
                labels[v, u1] = Label.EXCLUSIVE
                continue
            for u2 in range(u1 + 1, w):
                if disp.valid[v, u2] and bins[v, u2] == bins[v, u1]:
                    labels[v, u1] = Label.OCCLUDED
                    break
    return OcclusionMask(labels, disp.valid.copy())


def occlusion_mask(disp, bin_tolerance=1.0):
    """Label every pixel Visible, Occluded or Exclusive.

    Exclusive: ``d > u`` (target left of the right image).  Occluded: some
    valid pixel further right in the same row shares the target bin.  Each
    row is handled in one pass: for every (row, bin) key the right-most
    column holding it is found, and any pixel left of that column is hidden.
    """
    disp = as_disparity(disp)
    h, w = disp.shape
    labels = np.zeros((h, w), dtype=np.int8)
    if h == 0 or w == 0:
        return OcclusionMask(labels, disp.valid.copy())

    data = disp.filled(0.0)
    valid = disp.valid
    bins = target_bins(data, bin_tolerance)
    rows, cols = np.nonzero(valid)
    keys = bins[rows, cols]

    # right-most occupant of every (row, bin) group after sorting
    order = np.lexsort((cols, keys, rows))
    r_s, k_s, c_s = rows[order], keys[order], cols[order]
    start = np.ones(len(order), dtype=bool)
    start[1:] = (r_s[1:] != r_s[:-1]) | (k_s[1:] != k_s[:-1])
    group = np.cumsum(start) - 1
    ends = np.r_[np.flatnonzero(start)[1:] - 1, len(order) - 1]
    hidden = np.zeros(len(order), dtype=bool)
    hidden[order] = c_s < c_s[ends][group]

    labels[rows[hidden], cols[hidden]] = Label.OCCLUDED
    u = np.arange(w)[None, :]
    labels[valid & (data - u > 0)] = Label.EXCLUSIVE
    return OcclusionMask(labels, valid.copy())


def disparity_to_depth(disp, calib, cap=DEFAULT_DEPTH_CAP):
    """Depth in meters, ``focal * baseline / d``, clipped at ``cap``.

    Returns ``(depth, valid)``; zero or invalid disparities give invalid depth.
    ``cap=None`` disables the clip.
    """
    disp = as_disparity(disp)
    valid = disp.valid & (disp.data > 0)
    depth = np.zeros(disp.shape)
    depth[valid] = calib.focal * calib.baseline / disp.data[valid]
    if cap is not None:
        depth = np.minimum(depth, cap)
    return depth, valid


@dataclass
class OcclusionStats:
    mean_error_occluded: float
    mean_error_visible: float
    total_error_share_occluded: float
    total_error_share_visible: float
    area_share_occluded: float
    area_share_visible: float


def occlusion_stats(pred, gt, mask):
    """Split the L1 disparity error into occluded and visible parts.

    "Occluded" groups Occluded and Exclusive pixels, everything the loss mask
    drops.  Only pixels with valid ground truth count; ``0/0`` is reported
    as 0.
    """
    pred, gt = as_disparity(pred), as_disparity(gt)
    if pred.shape != gt.shape or mask.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape}, gt {gt.shape}, mask {mask.shape}")
    valid = gt.valid
    err = np.abs(pred.filled(0.0) - gt.filled(0.0))
    occ = valid & (mask.labels != Label.VISIBLE)
    vis = valid & (mask.labels == Label.VISIBLE)

    def _safe(num, den):
        return float(num / den) if den else 0.0

    e_occ, e_vis = err[occ].sum(), err[vis].sum()
    n_occ, n_vis = int(occ.sum()), int(vis.sum())
    return OcclusionStats(
        mean_error_occluded=_safe(e_occ, n_occ),
        mean_error_visible=_safe(e_vis, n_vis),
        total_error_share_occluded=_safe(e_occ, e_occ + e_vis),
        total_error_share_visible=_safe(e_vis, e_occ + e_vis),
        area_share_occluded=_safe(n_occ, n_occ + n_vis),
        area_share_visible=_safe(n_vis, n_occ + n_vis),
    )


# --------------------------------------------------------------------------
# mask images: 255 visible, 128 exclusive, 0 occluded

_MASK_CODES = {Label.VISIBLE: 255, Label.EXCLUSIVE: 128, Label.OCCLUDED: 0}


def write_mask_png(mask, path):
    img = np.zeros(mask.shape, dtype=np.uint8)
    for label, code in _MASK_CODES.items():
        img[mask.labels == label] = code
    Image.fromarray(img).save(path)


def read_mask_png(path):
    with Image.open(path) as im:
        img = np.array(im.convert("L"))
    labels = np.full(img.shape, Label.OCCLUDED, dtype=np.int8)
    labels[img >= 192] = Label.VISIBLE
    labels[(img >= 64) & (img < 192)] = Label.EXCLUSIVE
    return OcclusionMask(labels)
