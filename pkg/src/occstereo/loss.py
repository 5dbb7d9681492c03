"""
Occlusion-masked photometric objective and its gradient w.r.t. disparity.

Per pixel::

    C_r  = alpha * (1 - SSIM(I_l, I~_l)) / 2 + (1 - alpha) * |I_l - I~_l|
    C_ar = sum_win w * C_r / sum_win w,     w = exp(-|I(center) - I(x)| / 2)
    C_s  = |dx d| exp(-|dx I|) + |dy d| exp(-|dy I|)
    C    = w1 * C_ar + w2 * C_s

and the image loss is the mean of ``C`` over pixels with ``M == 1``.  The ASW
window is the ``2k x 2k`` block ``[i-k, i+k-1] x [j-k, j+k-1]`` truncated at
the image border.

SSIM uses 3x3 box statistics with symmetric (edge-repeating) padding.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .imgio import as_disparity
from .warp import reconstruct_left

SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


@dataclass
class LossParams:
    alpha: float = 0.8
    w1: float = 0.85
    w2: float = 0.15
    k: int = 16
    ssim_c1: float = SSIM_C1
    ssim_c2: float = SSIM_C2

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.w1 < 0 or self.w2 < 0:
            raise ValueError("loss weights must be non-negative")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("ASW half-window k must be an integer >= 1")
        self.k = int(self.k)


@dataclass
class LossField:
    cr: np.ndarray
    car: np.ndarray
    cs: np.ndarray
    total: float
    grad: np.ndarray


class DegenerateMaskError(ValueError):
    """Every pixel is masked out, the masked mean is undefined."""


def _check_same(*arrays):
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise ValueError(f"shape mismatch: {sorted(shapes)}")


# --------------------------------------------------------------------------
# 3x3 box mean and its adjoint

def _box3(x):
    p = np.pad(x, 1, mode="symmetric")
    h, w = x.shape
    out = np.zeros_like(x)
    for dy in range(3):
        for dx in range(3):
            out += p[dy:dy + h, dx:dx + w]
    return out / 9.0


def _box3_adjoint(g):
    h, w = g.shape
    p = np.zeros((h + 2, w + 2))
    for dy in range(3):
        for dx in range(3):
            p[dy:dy + h, dx:dx + w] += g
    p /= 9.0
    # fold the mirrored border back onto the pixels it copied
    p[1, :] += p[0, :]
    p[h, :] += p[h + 1, :]
    p[:, 1] += p[:, 0]
    p[:, w] += p[:, w + 1]
    return p[1:h + 1, 1:w + 1]


def _ssim_terms(a, b, c1, c2):
    mu_a, mu_b = _box3(a), _box3(b)
    var_a = _box3(a * a) - mu_a ** 2
    var_b = _box3(b * b) - mu_b ** 2
    cov = _box3(a * b) - mu_a * mu_b
    num1 = 2 * mu_a * mu_b + c1
    num2 = 2 * cov + c2
    den1 = mu_a ** 2 + mu_b ** 2 + c1
    den2 = var_a + var_b + c2
    ssim = num1 * num2 / (den1 * den2)
    return ssim, (mu_a, mu_b, num1, num2, den1, den2)


def ssim_map(a, b, c1=SSIM_C1, c2=SSIM_C2):
    """Per-pixel SSIM of two intensity images (3x3 uniform window)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same(a, b)
    return _ssim_terms(a, b, c1, c2)[0]


def _ssim_grad_b(a, b, g, ssim, terms):
    """Back-propagate ``g = dL/dSSIM`` to ``dL/db``."""
    mu_a, mu_b, num1, num2, den1, den2 = terms
    den = den1 * den2
    # SSIM as a function of box(b), box(b*b) and box(a*b)
    d_mu_b = (2 * mu_a * num2 - 2 * mu_a * num1) / den \
        - ssim * (2 * mu_b * den2 - 2 * mu_b * den1) / den
    d_q_b = -ssim * den1 / den
    d_x_ab = 2 * num1 / den
    return (_box3_adjoint(g * d_mu_b)
            + 2 * b * _box3_adjoint(g * d_q_b)
            + a * _box3_adjoint(g * d_x_ab))


# --------------------------------------------------------------------------
# per-pixel costs

def photometric_cost(left, recon, params=None, ssim=None):
    """Reconstruction cost ``alpha (1 - SSIM) / 2 + (1 - alpha) |I - I~|``.

    ``ssim`` may be supplied to skip recomputing the SSIM map.
    """
    params = params or LossParams()
    left = np.asarray(left, dtype=np.float64)
    recon = np.asarray(recon, dtype=np.float64)
    _check_same(left, recon)
    if ssim is None:
        ssim = ssim_map(left, recon, params.ssim_c1, params.ssim_c2)
    return params.alpha * (1 - ssim) / 2 + (1 - params.alpha) * np.abs(left - recon)


class AswOperator:
    """Adaptive-support-weight aggregation as a sparse row-stochastic matrix.

    The weights only depend on the guide image, so one operator serves every
    evaluation on the same left image.
    """

    def __init__(self, guide, k):
        guide = np.asarray(guide, dtype=np.float64)
        if k < 1:
            raise ValueError("k must be >= 1")
        self.shape = guide.shape
        self.k = k
        h, w = guide.shape
        idx = np.arange(h * w).reshape(h, w)
        rows, cols, vals = [], [], []
        # offsets at least one image size away select nothing
        for dy in range(max(-k, 1 - h), min(k, h)):
            ys = slice(max(0, -dy), min(h, h - dy))
            yt = slice(max(0, dy), min(h, h + dy))
            for dx in range(max(-k, 1 - w), min(k, w)):
                xs = slice(max(0, -dx), min(w, w - dx))
                xt = slice(max(0, dx), min(w, w + dx))
                center = guide[ys, xs]
                rows.append(idx[ys, xs].ravel())
                cols.append(idx[yt, xt].ravel())
                vals.append(np.exp(-np.abs(center - guide[yt, xt]) / 2).ravel())
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        norm = np.bincount(rows, weights=vals, minlength=h * w)
        vals = vals / norm[rows]
        self.matrix = sp.csr_matrix((vals, (rows, cols)), shape=(h * w, h * w))
        self._matrix_t = self.matrix.T.tocsr()

    def __call__(self, cost):
        return (self.matrix @ np.ravel(cost)).reshape(self.shape)

    def adjoint(self, g):
        return (self._matrix_t @ np.ravel(g)).reshape(self.shape)


def asw_aggregate(cost, guide, k):
    """Aggregate a cost map over ``2k x 2k`` windows weighted by the guide."""
    cost = np.asarray(cost, dtype=np.float64)
    _check_same(cost, guide)
    return AswOperator(guide, k)(cost)


def _smoothness_weights(left):
    ex = np.zeros_like(left)
    ey = np.zeros_like(left)
    ex[:, :-1] = np.exp(-np.abs(np.diff(left, axis=1)))
    ey[:-1, :] = np.exp(-np.abs(np.diff(left, axis=0)))
    return ex, ey


def _disp_diffs(d):
    gx = np.zeros_like(d)
    gy = np.zeros_like(d)
    gx[:, :-1] = np.diff(d, axis=1)
    gy[:-1, :] = np.diff(d, axis=0)
    return gx, gy


def smoothness_cost(disp, left):
    """Edge-aware smoothness with forward differences (zero on the last row/column)."""
    d = as_disparity(disp).filled(0.0)
    left = np.asarray(left, dtype=np.float64)
    _check_same(d, left)
    ex, ey = _smoothness_weights(left)
    gx, gy = _disp_diffs(d)
    return np.abs(gx) * ex + np.abs(gy) * ey


def _smoothness_backward(d, left, g):
    """Gradient of ``sum(g * C_s)`` w.r.t. the disparity."""
    ex, ey = _smoothness_weights(left)
    gx, gy = _disp_diffs(d)
    sx = g * np.sign(gx) * ex
    sy = g * np.sign(gy) * ey
    grad = np.zeros_like(d)
    grad[:, 1:] += sx[:, :-1]
    grad[:, :-1] -= sx[:, :-1]
    grad[1:, :] += sy[:-1, :]
    grad[:-1, :] -= sy[:-1, :]
    return grad


# --------------------------------------------------------------------------
# total loss

def total_loss(disp, left, right, mask=None, params=None, asw=None):
    """Masked mean of ``w1 C_ar + w2 C_s`` and its gradient w.r.t. disparity.

    ``mask`` is an :class:`~occstereo.geometry.OcclusionMask`, a 0/1 array,
    or ``None`` for all pixels.  Masked pixels still receive gradient through
    the ASW windows, SSIM windows and smoothness stencils of kept neighbours.
    ``asw`` may carry a prebuilt :class:`AswOperator` for ``left``.
    """
    params = params or LossParams()
    d = as_disparity(disp).filled(0.0)
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    _check_same(d, left, right)
    if mask is None:
        m = np.ones_like(d)
    else:
        m = np.asarray(getattr(mask, "binary", mask), dtype=np.float64)
        _check_same(m, d)
    count = m.sum()
    if count <= 0:
        raise DegenerateMaskError("every pixel is masked out")
    if asw is None:
        asw = AswOperator(left, params.k)

    rec = reconstruct_left(right, d)
    recon = rec.image
    ssim, terms = _ssim_terms(left, recon, params.ssim_c1, params.ssim_c2)
    cr = photometric_cost(left, recon, params, ssim=ssim)
    car = asw(cr)
    cs = smoothness_cost(d, left)
    per_pixel = params.w1 * car + params.w2 * cs
    total = float((m * per_pixel).sum() / count)

    # reverse pass
    g = m / count
    g_cr = asw.adjoint(params.w1 * g)
    g_recon = (-params.alpha / 2) * _ssim_grad_b(left, recon, g_cr, ssim, terms)
    g_recon += (1 - params.alpha) * np.sign(recon - left) * g_cr
    grad = g_recon * rec.ddisp

    grad += _smoothness_backward(d, left, params.w2 * g)

    return LossField(cr=cr, car=car, cs=cs, total=total, grad=grad)
