"""
Occlusion-aware iterative optimisation of a per-pixel disparity field.

The schedule follows the training recipe the method was built around: the
first epoch uses every pixel, and before each later epoch the occlusion mask
is recomputed from the current disparity and the loss is restricted to the
visible pixels.  Instead of network weights the free parameters are the
disparities themselves, updated by plain gradient descent::

    d <- clip(d - lr * (H * W) * dC/dd, 0, max_disp)

``C`` is a per-pixel mean, so its gradient is rescaled by the pixel count to
make ``lr`` a step size in pixels.  The learning rate decays geometrically
once per epoch.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter

from .geometry import OcclusionMask, occlusion_mask
from .imgio import DisparityMap, as_disparity
from .loss import AswOperator, LossParams, total_loss

log = logging.getLogger(__name__)


@dataclass
class GoatConfig:
    epochs: int = 20
    steps_per_epoch: int = 30
    learning_rate: float = 0.5
    lr_decay: float = 0.95
    max_disp: float = 16.0
    bin_tolerance: float = 1.0
    update_masks: bool = True
    init: str = "block_match"      # or "constant"
    init_value: float = 0.0        # used by the constant init
    patch: int = 5                 # block matching window
    prior_weight: float = 0.0      # guided coupling, see GuidedPrior
    prior_radius: int = 3
    prior_gamma: float = 0.1
    loss: LossParams = field(default_factory=LossParams)

    def __post_init__(self):
        if isinstance(self.loss, dict):
            self.loss = LossParams(**self.loss)
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.steps_per_epoch < 0:
            raise ValueError("steps_per_epoch must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must lie in (0, 1]")
        if self.init not in ("block_match", "constant"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.prior_weight < 0:
            raise ValueError("prior_weight must be >= 0")
        if self.prior_radius < 1 or not self.prior_gamma > 0:
            raise ValueError("prior_radius must be >= 1 and prior_gamma positive")
        if self.patch < 1 or self.patch % 2 == 0:
            raise ValueError("patch must be a positive odd integer")


@dataclass
class EpochRecord:
    epoch: int
    loss_start: float
    loss: float
    masked_fraction: float
    epe: float = float("nan")
    epe_occluded: float = float("nan")


@dataclass
class GoatTrace:
    epochs: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    COLUMNS = ("epoch", "loss_start", "loss", "masked_fraction", "epe", "epe_occluded")

    def to_text(self):
        """Whitespace-separated table, one row per epoch."""
        rows = ["\t".join(self.COLUMNS)]
        for r in self.epochs:
            rows.append("\t".join([str(r.epoch)] + [f"{getattr(r, c):.8g}"
                                                    for c in self.COLUMNS[1:]]))
        return "\n".join(rows) + "\n"

    @property
    def masked_fractions(self):
        return np.array([r.masked_fraction for r in self.epochs])

    @property
    def losses(self):
        return np.array([r.loss for r in self.epochs])


class DivergenceError(RuntimeError):
    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


class GuidedPrior:
    """Quadratic coupling of disparities between nearby, similar-looking pixels.

    ``P(d) = sum_{i~j} w_ij (d_i - d_j)^2 / (N * 2 * #offsets)`` over pixel
    pairs closer than ``radius``, with ``w_ij = exp(-|I_i - I_j| / gamma)``
    taken from the guide image.  It is applied to every pixel, masked or not,
    and gives pixels excluded from the photometric loss a value borrowed
    from the surface they resemble.
    """

    def __init__(self, guide, radius=3, gamma=0.1):
        guide = np.asarray(guide, dtype=np.float64)
        h, w = guide.shape
        self.shape = guide.shape
        self.pairs = []
        for dy in range(radius + 1):
            for dx in range(-radius, radius + 1):
                if (dy == 0 and dx <= 0) or dy * dy + dx * dx > radius * radius:
                    continue
                a = (slice(0, h - dy), slice(max(0, -dx), w - max(0, dx)))
                b = (slice(dy, h), slice(max(0, dx), w + min(0, dx)))
                weight = np.exp(-np.abs(guide[a] - guide[b]) / gamma)
                self.pairs.append((a, b, weight))
        self.norm = guide.size * 2 * len(self.pairs)

    def __call__(self, d):
        value = 0.0
        grad = np.zeros(self.shape)
        for a, b, weight in self.pairs:
            diff = d[a] - d[b]
            value += float((weight * diff * diff).sum())
            g = 2 * weight * diff
            grad[a] += g
            grad[b] -= g
        return value / self.norm, grad / self.norm


def block_match(left, right, max_disp, patch=5):
    """Winner-take-all SAD block matching over integer disparities.

    Candidates that would sample left of the right image are skipped; ties
    go to the smallest disparity.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    h, w = left.shape
    if max_disp >= w:
        raise ValueError(f"max_disp {max_disp} must be smaller than the image width {w}")
    n = int(max_disp) + 1
    cost = np.full((n, h, w), np.inf)
    for d in range(n):
        diff = np.abs(left[:, d:] - right[:, :w - d])
        cost[d, :, d:] = uniform_filter(diff, size=patch, mode="nearest")
    return np.argmin(cost, axis=0).astype(np.float64)


def init_disparity(left, right, config):
    left = np.asarray(left, dtype=np.float64)
    if config.init == "constant":
        return DisparityMap(np.full(left.shape, float(config.init_value)))
    return DisparityMap(block_match(left, right, config.max_disp, config.patch))


def _epe(d, gt, sel=None):
    valid = gt.valid if sel is None else gt.valid & sel
    if not valid.any():
        return float("nan")
    return float(np.abs(d[valid] - gt.data[valid]).mean())


def goat_optimize(left, right, config=None, gt=None, init=None,
                  gt_mask=None, snapshot_every=0):
    """Optimise the left disparity of a rectified pair.

    Returns ``(disparity, mask, trace)``; ``mask`` is the occlusion mask of
    the returned disparity.  With ``config.update_masks`` off every epoch
    trains on all pixels (the ablation).  ``gt`` (and optionally
    ``gt_mask`` for the occluded-region EPE) only feed the trace.
    """
    config = config or GoatConfig()
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.shape != right.shape:
        raise ValueError("left and right images differ in shape")
    gt = as_disparity(gt) if gt is not None else None

    d = (as_disparity(init) if init is not None else init_disparity(left, right, config))
    d = np.clip(d.filled(0.0), 0, config.max_disp)
    asw = AswOperator(left, config.loss.k)
    prior = (GuidedPrior(left, config.prior_radius, config.prior_gamma)
             if config.prior_weight else None)
    npix = d.size
    trace = GoatTrace()
    mask = OcclusionMask.all_visible(d.shape)

    lr = config.learning_rate
    for epoch in range(1, config.epochs + 1):
        if epoch > 1 and config.update_masks:
            mask = occlusion_mask(d, config.bin_tolerance)
        if mask.binary.sum() == 0:
            log.warning("epoch %d: every pixel is masked, keeping previous mask", epoch)
            mask = OcclusionMask.all_visible(d.shape)

        def objective(d):
            field_ = total_loss(d, left, right, mask, config.loss, asw=asw)
            value, grad = field_.total, field_.grad
            if prior is not None:
                p_value, p_grad = prior(d)
                value += config.prior_weight * p_value
                grad = grad + config.prior_weight * p_grad
            if not np.isfinite(value):
                raise DivergenceError(f"non-finite loss in epoch {epoch}", trace)
            return value, grad

        start = None
        for _ in range(config.steps_per_epoch):
            value, grad = objective(d)
            if start is None:
                start = value
            d = np.clip(d - lr * npix * grad, 0, config.max_disp)

        end = objective(d)[0]
        rec = EpochRecord(epoch=epoch, loss_start=end if start is None else start, loss=end,
                          masked_fraction=float(1 - mask.binary.mean()))
        if gt is not None:
            rec.epe = _epe(d, gt)
            if gt_mask is not None:
                rec.epe_occluded = _epe(d, gt, gt_mask.occluded)
        trace.epochs.append(rec)
        if snapshot_every and epoch % snapshot_every == 0:
            trace.snapshots.append((epoch, d.copy(), mask))
        log.debug("epoch %d loss %.6f masked %.3f", epoch, end, rec.masked_fraction)
        lr *= config.lr_decay

    final = DisparityMap(d)
    return final, occlusion_mask(final, config.bin_tolerance), trace
