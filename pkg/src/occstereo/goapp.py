"""
Occlusion-aware post-processing: refill occluded disparities from neighbours.

Rows are processed independently.

1. From the first visible column on, the row is swept left to right and
   every Occluded pixel takes the mean of the ``n`` nearest usable columns
   on its left.
2. The leading run of non-visible columns (the left-exclusive strip and
   anything occluded before the first visible pixel) is then filled right
   to left, each pixel taking the mean of the ``n`` nearest usable columns
   on its right.

"Usable" means visible in the mask or already filled.  Left neighbours are
used in step 1 because the occluder of a left-view occlusion always sits
further right, so the left side carries the hidden background surface.
Visible pixels are never modified.
"""
import numpy as np

from .imgio import DisparityMap, as_disparity

DEFAULT_NEIGHBORS = 10


def _fill_row(values, occluded, usable, n):
    """Fill one row in place; return the flags of the pixels written."""
    filled = np.zeros(len(values), dtype=bool)
    first = np.flatnonzero(usable)
    if first.size == 0:
        return filled
    k = first[0]
    usable = usable.copy()

    # usable columns left of the sweep position, nearest last
    history = [k]
    for j in range(k + 1, len(values)):
        if occluded[j]:
            values[j] = values[history[-n:]].mean()
            usable[j] = filled[j] = True
        if usable[j]:
            history.append(j)

    # the leading strip last, so it sees the refilled occluded pixels
    for j in range(k - 1, -1, -1):
        right = np.flatnonzero(usable[j + 1:])[:n] + j + 1
        values[j] = values[right].mean()
        usable[j] = filled[j] = True
    return filled


def goapp(disp, mask, n=DEFAULT_NEIGHBORS):
    """Refill Occluded and leading Exclusive pixels of ``disp`` per ``mask``.

    Rows without any visible pixel are returned unchanged.
    """
    if n < 1:
        raise ValueError("neighbour count n must be >= 1")
    disp = as_disparity(disp)
    if disp.shape != mask.shape:
        raise ValueError(f"shape mismatch: disparity {disp.shape}, mask {mask.shape}")
    out = disp.data.copy()
    valid = disp.valid.copy()
    usable = mask.visible & disp.valid
    for v in range(out.shape[0]):
        valid[v] |= _fill_row(out[v], mask.occluded[v], usable[v], n)
    return DisparityMap(out, valid)
