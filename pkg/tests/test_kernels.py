"""Cross-backend agreement between the numba kernels and the numpy twins."""

import numpy as np
import pytest

from crossview import kernels
from crossview.kernels import _numpy

numba_backend = pytest.importorskip("crossview.kernels._numba")


def test_active_backend_is_reported():
    assert kernels.active_backend() in ("numba", "numpy")


@pytest.mark.parametrize("sh,sw,wrap,pad_h", [
    (1, 1, True, True),
    (1, 1, False, True),
    (2, 1, True, True),
    (2, 1, True, False),
    (2, 2, False, False),
])
def test_conv_forward_twins_agree(sh, sw, wrap, pad_h):
    rng = np.random.default_rng(0)
    img = rng.standard_normal((12, 10, 3))
    w = rng.standard_normal((3, 3, 3, 5))
    b = rng.standard_normal(5)
    a = numba_backend.conv2d_forward(img, w, b, sh, sw, wrap, pad_h)
    c = _numpy.conv2d_forward(img, w, b, sh, sw, wrap, pad_h)
    assert a.shape == c.shape
    assert np.allclose(a, c, atol=1e-12)


@pytest.mark.parametrize("sh,sw,wrap,pad_h", [
    (1, 1, True, True),
    (2, 1, True, True),
    (1, 1, False, False),
])
def test_conv_backward_twins_agree(sh, sw, wrap, pad_h):
    rng = np.random.default_rng(1)
    img = rng.standard_normal((10, 8, 2))
    w = rng.standard_normal((3, 3, 2, 4))
    b = rng.standard_normal(4)
    out = _numpy.conv2d_forward(img, w, b, sh, sw, wrap, pad_h)
    dout = rng.standard_normal(out.shape)
    dw1, db1, dx1 = numba_backend.conv2d_backward(img, w, dout, sh, sw, wrap, pad_h)
    dw2, db2, dx2 = _numpy.conv2d_backward(img, w, dout, sh, sw, wrap, pad_h)
    assert np.allclose(dw1, dw2, atol=1e-12)
    assert np.allclose(db1, db2, atol=1e-12)
    assert np.allclose(dx1, dx2, atol=1e-12)


def test_maxpool_twins_agree_including_tie_rule():
    rng = np.random.default_rng(2)
    img = rng.standard_normal((9, 11, 3))
    # inject exact ties to exercise the first-max rule
    img[0, 0] = img[0, 1] = img[1, 0] = img[1, 1] = 0.5
    a = numba_backend.maxpool_forward(img, 2, 2, 2, 2)
    c = _numpy.maxpool_forward(img, 2, 2, 2, 2)
    assert np.array_equal(a, c)
    dout = rng.standard_normal(a.shape)
    da = numba_backend.maxpool_backward(img, dout, 2, 2, 2, 2)
    dc = _numpy.maxpool_backward(img, dout, 2, 2, 2, 2)
    assert np.array_equal(da, dc)


def test_samplers_agree_bitwise():
    rng = np.random.default_rng(3)
    src = rng.standard_normal((15, 17, 3))
    u = rng.uniform(-2.0, 19.0, (6, 9))
    v = rng.uniform(-2.0, 17.0, (6, 9))
    assert np.array_equal(
        numba_backend.bilinear_sample(src, u, v), _numpy.bilinear_sample(src, u, v)
    )
    assert np.array_equal(
        numba_backend.nearest_sample(src, u, v), _numpy.nearest_sample(src, u, v)
    )


def test_cyclic_corr_twins_bitwise():
    rng = np.random.default_rng(4)
    fa = rng.standard_normal((3, 9, 2))
    fg = rng.standard_normal((3, 4, 2))
    assert np.array_equal(numba_backend.cyclic_corr(fa, fg), _numpy.cyclic_corr(fa, fg))


def test_get_backend_lookup():
    assert kernels.get_backend("numpy") is _numpy
    assert kernels.get_backend("numba") is numba_backend
    with pytest.raises(ValueError):
        kernels.get_backend("cuda")
