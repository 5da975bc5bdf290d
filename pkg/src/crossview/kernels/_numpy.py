"""Vectorized numpy implementations of the hot kernels.

These are the fallback path used when numba is unavailable or when
CROSSVIEW_BACKEND=numpy is set. Interpolation expression trees mirror the
numba twins exactly so both backends produce bit-identical samples.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._corrloop import cyclic_corr

__all__ = [
    "conv2d_forward",
    "conv2d_backward",
    "maxpool_forward",
    "maxpool_backward",
    "bilinear_sample",
    "nearest_sample",
    "cyclic_corr",
]


def _pad_input(img, kh, kw, wrap_w, pad_h):
    ph = kh // 2 if pad_h else 0
    pw = kw // 2
    if pw:
        if wrap_w:
            img = np.concatenate([img[:, -pw:], img, img[:, :pw]], axis=1)
        else:
            img = np.pad(img, ((0, 0), (pw, pw), (0, 0)))
    if ph:
        img = np.pad(img, ((ph, ph), (0, 0), (0, 0)))
    return img, ph, pw


def conv2d_forward(img, weights, bias, sh, sw, wrap_w, pad_h):
    kh, kw = weights.shape[0], weights.shape[1]
    padded, _, _ = _pad_input(img, kh, kw, wrap_w, pad_h)
    windows = sliding_window_view(padded, (kh, kw), axis=(0, 1))[::sh, ::sw]
    out = np.einsum("hwcij,ijco->hwo", windows, weights, optimize=True)
    out += bias
    return out


def conv2d_backward(img, weights, dout, sh, sw, wrap_w, pad_h):
    h_in, w_in = img.shape[0], img.shape[1]
    kh, kw = weights.shape[0], weights.shape[1]
    padded, ph, pw = _pad_input(img, kh, kw, wrap_w, pad_h)
    windows = sliding_window_view(padded, (kh, kw), axis=(0, 1))[::sh, ::sw]
    db = dout.sum(axis=(0, 1))
    dw = np.einsum("hwcij,hwo->ijco", windows, dout, optimize=True)

    dpad = np.zeros_like(padded)
    h_out, w_out = dout.shape[0], dout.shape[1]
    for i in range(kh):
        for j in range(kw):
            contrib = dout @ weights[i, j].T
            dpad[i : i + sh * h_out : sh, j : j + sw * w_out : sw] += contrib
    if ph:
        dpad = dpad[ph:-ph]
    if pw:
        if wrap_w:
            dimg = dpad[:, pw : pw + w_in].copy()
            dimg[:, -pw:] += dpad[:, :pw]
            dimg[:, :pw] += dpad[:, pw + w_in :]
        else:
            dimg = dpad[:, pw:-pw].copy()
    else:
        dimg = dpad
    return dw, db, dimg


def maxpool_forward(img, kh, kw, sh, sw):
    windows = sliding_window_view(img, (kh, kw), axis=(0, 1))[::sh, ::sw]
    return windows.max(axis=(3, 4))


def maxpool_backward(img, dout, kh, kw, sh, sw):
    h_out, w_out, chans = dout.shape
    windows = sliding_window_view(img, (kh, kw), axis=(0, 1))[::sh, ::sw]
    flat = windows.reshape(h_out, w_out, chans, kh * kw)
    # argmax picks the first maximum in (row, col) window scan order,
    # matching the loop backend's tie rule
    idx = flat.argmax(axis=3)
    di, dj = np.divmod(idx, kw)
    dimg = np.zeros_like(img)
    ho = np.arange(h_out)[:, None, None]
    wo = np.arange(w_out)[None, :, None]
    cc = np.arange(chans)[None, None, :]
    np.add.at(dimg, (ho * sh + di, wo * sw + dj, cc), dout)
    return dimg


def bilinear_sample(src, u, v):
    """Sample src at continuous (u, v) points, pixel centers at i + 0.5.

    Out-of-range reads clamp to the border pixel. The interpolation form
    (top/bottom lerp, then vertical lerp) is pinned; do not refactor it,
    the loop backend and the test oracles use the identical tree.
    """
    n_rows, n_cols = src.shape[0], src.shape[1]
    x = u - 0.5
    y = v - 0.5
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    ix = x0.astype(np.int64)
    iy = y0.astype(np.int64)
    x0i = np.clip(ix, 0, n_cols - 1)
    x1i = np.clip(ix + 1, 0, n_cols - 1)
    y0i = np.clip(iy, 0, n_rows - 1)
    y1i = np.clip(iy + 1, 0, n_rows - 1)
    p00 = src[y0i, x0i]
    p01 = src[y0i, x1i]
    p10 = src[y1i, x0i]
    p11 = src[y1i, x1i]
    top = p00 + fx * (p01 - p00)
    bot = p10 + fx * (p11 - p10)
    return top + fy * (bot - top)


def nearest_sample(src, u, v):
    """Cell lookup: pixel i covers [i, i+1), clamped at the borders."""
    n_rows, n_cols = src.shape[0], src.shape[1]
    xi = np.clip(np.floor(u).astype(np.int64), 0, n_cols - 1)
    yi = np.clip(np.floor(v).astype(np.int64), 0, n_rows - 1)
    return src[yi, xi]
