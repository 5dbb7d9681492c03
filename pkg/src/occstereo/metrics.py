"""
Stereo evaluation: KITTI D1-all and EPE on disparity, the usual depth errors
(Abs Rel, Sq Rel, RMSE, RMSE log, delta thresholds) on depth.

Predicted depths are clipped at ``cap`` meters (80 by default) and depth
errors are taken over pixels whose true depth lies within the cap, as in the
usual monocular-depth evaluation.  Pixels without valid ground truth are
ignored everywhere.
"""
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import DEFAULT_DEPTH_CAP, Label
from .imgio import as_disparity

D1_ABS_THRESH = 3.0
D1_REL_THRESH = 0.05

REGIONS = ("all", "visible", "occluded", "exclusive", "nonvisible")


@dataclass
class EvalReport:
    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    d1_all: float
    epe: float
    delta1: float
    delta2: float
    delta3: float
    n_valid: int

    def as_dict(self):
        return asdict(self)

    def to_text(self):
        """Aligned two-line table."""
        keys = list(self.as_dict())
        vals = [_fmt(v) for v in self.as_dict().values()]
        widths = [max(len(k), len(v)) for k, v in zip(keys, vals)]
        head = "  ".join(k.rjust(w) for k, w in zip(keys, widths))
        body = "  ".join(v.rjust(w) for v, w in zip(vals, widths))
        return head + "\n" + body

    def to_kv(self):
        return "\n".join(f"{k}={_fmt(v)}" for k, v in self.as_dict().items())


def _fmt(v):
    return str(v) if isinstance(v, (int, np.integer)) else f"{v:.6f}"


def region_selector(mask, region):
    """Boolean pixel selection for a named mask class."""
    if region == "all" or mask is None:
        return None
    if region == "visible":
        return mask.labels == Label.VISIBLE
    if region == "occluded":
        return mask.labels == Label.OCCLUDED
    if region == "exclusive":
        return mask.labels == Label.EXCLUSIVE
    if region == "nonvisible":
        return mask.labels != Label.VISIBLE
    raise ValueError(f"unknown region {region!r}, expected one of {REGIONS}")


def d1_outliers(pred, gt):
    """KITTI outlier test: error above 3 px and above 5 % of the true disparity."""
    err = np.abs(np.asarray(pred, dtype=np.float64) - np.asarray(gt, dtype=np.float64))
    return (err > D1_ABS_THRESH) & (err > D1_REL_THRESH * np.abs(gt))


def evaluate(pred, gt, calib, cap=DEFAULT_DEPTH_CAP, region_mask=None, region="visible"):
    """Compare a predicted disparity map against ground truth.

    With ``region_mask`` the evaluation is restricted to one class of that
    mask (``region``: visible, occluded, exclusive or nonvisible).
    Depth metrics use pixels with positive true disparity and true depth
    within ``cap``; a predicted disparity that is invalid or non-positive
    counts as infinitely far and is therefore clipped to ``cap``.
    ``cap=None`` disables both the clip and the depth range.
    """
    pred, gt = as_disparity(pred), as_disparity(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape}, gt {gt.shape}")
    sel = gt.valid.copy()
    if region_mask is not None:
        if region_mask.shape != gt.shape:
            raise ValueError("region mask shape differs from ground truth")
        chosen = region_selector(region_mask, region)
        if chosen is not None:
            sel &= chosen
    n_valid = int(sel.sum())
    if n_valid == 0:
        raise ValueError("no valid ground-truth pixels in the evaluated region")

    p = pred.filled(0.0)[sel]
    g = gt.data[sel]
    epe = float(np.abs(p - g).mean())
    d1 = float(d1_outliers(p, g).mean())

    fb = calib.focal * calib.baseline
    pos = g > 0
    if cap is not None:
        pos &= g >= fb / cap
    if pos.any():
        gt_depth = fb / g[pos]
        pp = p[pos]
        with np.errstate(divide="ignore"):
            pred_depth = np.where(pp > 0, fb / np.where(pp > 0, pp, 1.0), np.inf)
        if cap is not None:
            pred_depth = np.minimum(pred_depth, cap)
        ratio = np.maximum(gt_depth / pred_depth, pred_depth / gt_depth)
        diff = pred_depth - gt_depth
        abs_rel = float(np.mean(np.abs(diff) / gt_depth))
        sq_rel = float(np.mean(diff ** 2 / gt_depth))
        rmse = float(np.sqrt(np.mean(diff ** 2)))
        rmse_log = float(np.sqrt(np.mean((np.log(pred_depth) - np.log(gt_depth)) ** 2)))
        deltas = [float((ratio < 1.25 ** n).mean()) for n in (1, 2, 3)]
    else:
        abs_rel = sq_rel = rmse = rmse_log = float("nan")
        deltas = [float("nan")] * 3

    return EvalReport(abs_rel=abs_rel, sq_rel=sq_rel, rmse=rmse, rmse_log=rmse_log,
                      d1_all=d1, epe=epe, delta1=deltas[0], delta2=deltas[1],
                      delta3=deltas[2], n_valid=n_valid)
