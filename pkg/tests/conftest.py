import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_disparity(rng, h, w, max_disp=16.0):
    """Mix of integer plateaus, sub-pixel ramps and noise, like real maps."""
    d = np.empty((h, w))
    for v in range(h):
        kind = rng.integers(3)
        if kind == 0:
            cuts = np.sort(rng.integers(0, w, size=rng.integers(0, 4)))
            levels = rng.integers(0, int(max_disp) + 1, size=len(cuts) + 1)
            d[v] = np.repeat(levels, np.diff(np.r_[0, cuts, w]))
        elif kind == 1:
            a, b = rng.uniform(0, max_disp, 2)
            d[v] = np.linspace(a, b, w)
        else:
            d[v] = rng.uniform(0, max_disp, w)
    return d
