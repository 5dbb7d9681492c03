import numpy as np
import pytest

from occstereo.geometry import OcclusionMask, occlusion_mask
from occstereo.goat import (DivergenceError, GoatConfig, GuidedPrior, block_match,
                            goat_optimize, init_disparity)
from occstereo.loss import LossParams
from occstereo.synth import Background, Layer, SceneSpec, Texture, render


def _scene(seed=0):
    spec = SceneSpec(40, 24, [Layer(16, 4, 14, 14, 7, Texture("noise", 5, 1.0, 4, 0.6, 0.95))],
                     Background(1, Texture("noise", 3, 1.0, 4, 0.05, 0.4)))
    return render(spec, seed)


def _small_config(**kw):
    base = dict(epochs=4, steps_per_epoch=5, max_disp=10, loss=LossParams(k=1),
                prior_weight=1.0)
    base.update(kw)
    return GoatConfig(**base)


def test_config_validation():
    for bad in (dict(epochs=0), dict(learning_rate=0), dict(lr_decay=0), dict(lr_decay=1.5),
                dict(init="random"), dict(patch=4), dict(prior_weight=-1),
                dict(steps_per_epoch=-1)):
        with pytest.raises(ValueError):
            GoatConfig(**bad)
    assert GoatConfig(loss={"k": 2}).loss.k == 2


def test_constant_init():
    cfg = GoatConfig(init="constant", init_value=3.0)
    d = init_disparity(np.zeros((3, 4)), np.zeros((3, 4)), cfg)
    assert np.all(d.data == 3.0)


def test_block_match_on_shifted_texture():
    rng = np.random.default_rng(0)
    wide = rng.random((20, 60))
    s = 4
    left, right = wide[:, :-s], wide[:, s:]     # left(u) == right(u - s)
    d = block_match(left, right, 10, 5)
    assert np.all(d[2:-2, s + 2:-2] == s)


def test_block_match_ties_and_range():
    flat = np.full((5, 8), 0.5)
    assert np.all(block_match(flat, flat, 4) == 0)
    with pytest.raises(ValueError):
        block_match(flat, flat, 8)


def test_zero_steps_returns_init():
    s = _scene()
    init = np.full(s.left.shape, 2.0)
    d, mask, trace = goat_optimize(s.left, s.right, _small_config(steps_per_epoch=0, epochs=1),
                                   init=init)
    assert np.array_equal(d.data, init)
    # the mask describes the returned disparity, the epoch itself used all pixels
    assert mask == occlusion_mask(init)
    assert trace.epochs[0].masked_fraction == 0


def test_first_epoch_trains_on_all_pixels_then_masks():
    s = _scene()
    _, _, trace = goat_optimize(s.left, s.right, _small_config(), snapshot_every=1)
    fractions = trace.masked_fractions
    assert fractions[0] == 0
    assert np.all((fractions >= 0) & (fractions <= 1))
    assert fractions[1:].max() > 0
    # each snapshot's mask is the one its epoch trained with
    for epoch, d, mask in trace.snapshots[:-1]:
        assert occlusion_mask(d) == trace.snapshots[epoch][2]


def test_returned_mask_matches_returned_disparity():
    s = _scene()
    d, mask, _ = goat_optimize(s.left, s.right, _small_config())
    assert mask == occlusion_mask(d)


def test_deterministic():
    s = _scene()
    a = goat_optimize(s.left, s.right, _small_config())
    b = goat_optimize(s.left, s.right, _small_config())
    assert np.array_equal(a[0].data, b[0].data)
    assert a[2].to_text() == b[2].to_text()


def test_loss_decreases_within_epochs():
    s = _scene()
    _, _, trace = goat_optimize(s.left, s.right, _small_config(epochs=3, steps_per_epoch=10))
    for rec in trace.epochs:
        assert rec.loss <= rec.loss_start


def test_clamped_to_range():
    s = _scene()
    d, _, _ = goat_optimize(s.left, s.right, _small_config(max_disp=3, learning_rate=5.0))
    assert d.data.min() >= 0 and d.data.max() <= 3


def test_trace_with_ground_truth():
    s = _scene()
    _, _, trace = goat_optimize(s.left, s.right, _small_config(), gt=s.gt_disp,
                                gt_mask=s.gt_mask)
    text = trace.to_text().splitlines()
    assert text[0].split("\t") == list(trace.COLUMNS)
    assert len(text) == 5
    assert all(np.isfinite(r.epe) and np.isfinite(r.epe_occluded) for r in trace.epochs)


@pytest.mark.slow
def test_masked_fraction_settles():
    s = _scene()
    cfg = _small_config(epochs=20, steps_per_epoch=30, max_disp=16, prior_weight=1.5)
    _, _, trace = goat_optimize(s.left, s.right, cfg)
    steps = np.abs(np.diff(trace.masked_fractions))
    assert steps[-5:].mean() < steps[:5].mean()


def test_divergence_is_reported():
    s = _scene()
    right = s.right.copy()
    right[0, 0] = np.nan
    with pytest.raises(DivergenceError) as info:
        goat_optimize(s.left, right, _small_config())
    assert info.value.trace is not None


def test_guided_prior_gradient(rng):
    guide = rng.random((7, 9))
    prior = GuidedPrior(guide, radius=2, gamma=0.2)
    d = rng.uniform(0, 5, guide.shape)
    _, grad = prior(d)
    h = 1e-6
    for i, j in [(0, 0), (3, 4), (6, 8), (2, 7)]:
        e = np.zeros_like(d)
        e[i, j] = h
        fd = (prior(d + e)[0] - prior(d - e)[0]) / (2 * h)
        assert grad[i, j] == pytest.approx(fd, rel=1e-6)


def test_guided_prior_pair_weights():
    guide = np.array([[0.0, 0.0, 1.0]])
    prior = GuidedPrior(guide, radius=1, gamma=0.5)
    # one row: only the horizontal offset has pairs, (0,1) weight 1 and (1,2) weight exp(-2)
    assert len(prior.pairs) == 2     # offsets (0, 1) and (1, 0)
    value, _ = prior(np.array([[0.0, 1.0, 3.0]]))
    assert value == pytest.approx((1.0 + np.exp(-2) * 4.0) / (3 * 2 * 2))
    assert prior(np.full((1, 3), 4.0))[0] == 0
