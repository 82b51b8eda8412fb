import numpy as np
import pytest

from lscpa import _pykernels, kernels
from lscpa.channel import draw_iid_rayleigh

try:
    from lscpa import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


@pytest.mark.parametrize("R", [1, 2, 3])
def test_python_kernel_matches_svd(R, rng):
    h, t = draw_iid_rayleigh((50, 6, R), rng), draw_iid_rayleigh((50, 6, R), rng)
    gt, ge = _pykernels.mrt_gains(t, h)
    for i in range(50):
        u, s, _ = np.linalg.svd(h[i])
        assert ge[i] == pytest.approx(s[0] ** 2, rel=1e-10)
        assert gt[i] == pytest.approx(np.sum(np.abs(t[i].T @ np.conj(u[:, 0])) ** 2), rel=1e-10)


@needs_ext
@pytest.mark.parametrize("R", [1, 2, 3])
def test_backends_agree_mrt(R, rng):
    h, t = draw_iid_rayleigh((500, 32, R), rng), draw_iid_rayleigh((500, 32, R), rng)
    a = _ckernels.mrt_gains(t, h)
    b = _pykernels.mrt_gains(t, h)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-11)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-11)


@needs_ext
def test_backends_agree_random(rng):
    h = draw_iid_rayleigh((500, 16, 2), rng)
    w = draw_iid_rayleigh((500, 16), rng)
    np.testing.assert_allclose(_ckernels.random_gains(h, w), _pykernels.random_gains(h, w), rtol=1e-12)


def test_perfect_estimate_gains_equal(rng):
    h = draw_iid_rayleigh((200, 8, 2), rng)
    gt, ge = kernels.mrt_gains(h, h)
    np.testing.assert_allclose(gt, ge, rtol=1e-12)


def test_rank_one_estimate(rng):
    col = draw_iid_rayleigh((10, 8, 1), rng)
    h = np.concatenate([col, 2j * col], axis=2)
    gt, ge = kernels.mrt_gains(h, h)
    np.testing.assert_allclose(gt, 5 * np.sum(np.abs(col[:, :, 0]) ** 2, axis=1), rtol=1e-10)


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
