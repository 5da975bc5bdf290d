"""Numba @njit implementations of the hot kernels.

Compiled without fastmath so float accumulation keeps IEEE ordering;
the interpolation expression trees match the numpy twins bit for bit.
"""

import numpy as np
from numba import njit

from . import _corrloop

__all__ = [
    "conv2d_forward",
    "conv2d_backward",
    "maxpool_forward",
    "maxpool_backward",
    "bilinear_sample",
    "nearest_sample",
    "cyclic_corr",
]

cyclic_corr = njit(cache=True)(_corrloop.cyclic_corr)


@njit(cache=True)
def conv2d_forward(img, weights, bias, sh, sw, wrap_w, pad_h):
    h_in, w_in, c_in = img.shape
    kh, kw, _, c_out = weights.shape
    ph = kh // 2 if pad_h else 0
    pw = kw // 2
    if wrap_w:
        w_out = (w_in + sw - 1) // sw
    else:
        w_out = (w_in + 2 * pw - kw) // sw + 1
    h_out = (h_in + 2 * ph - kh) // sh + 1
    # (kh, kw, c_out, c_in) layout makes the inner reduction a contiguous dot
    wt = np.ascontiguousarray(weights.transpose(0, 1, 3, 2))
    out = np.empty((h_out, w_out, c_out))
    for ho in range(h_out):
        hbase = ho * sh - ph
        for wo in range(w_out):
            wbase = wo * sw - pw
            for co in range(c_out):
                acc = bias[co]
                for i in range(kh):
                    hi = hbase + i
                    if hi < 0 or hi >= h_in:
                        continue
                    for j in range(kw):
                        wi = wbase + j
                        if wrap_w:
                            wi = wi % w_in
                        elif wi < 0 or wi >= w_in:
                            continue
                        for ci in range(c_in):
                            acc += img[hi, wi, ci] * wt[i, j, co, ci]
                out[ho, wo, co] = acc
    return out


@njit(cache=True)
def conv2d_backward(img, weights, dout, sh, sw, wrap_w, pad_h):
    h_in, w_in, c_in = img.shape
    kh, kw, _, c_out = weights.shape
    h_out, w_out, _ = dout.shape
    ph = kh // 2 if pad_h else 0
    pw = kw // 2
    dw = np.zeros_like(weights)
    db = np.zeros(c_out)
    dimg = np.zeros_like(img)
    for ho in range(h_out):
        hbase = ho * sh - ph
        for wo in range(w_out):
            wbase = wo * sw - pw
            for co in range(c_out):
                db[co] += dout[ho, wo, co]
            for i in range(kh):
                hi = hbase + i
                if hi < 0 or hi >= h_in:
                    continue
                for j in range(kw):
                    wi = wbase + j
                    if wrap_w:
                        wi = wi % w_in
                    elif wi < 0 or wi >= w_in:
                        continue
                    for ci in range(c_in):
                        v = img[hi, wi, ci]
                        g = 0.0
                        for co in range(c_out):
                            d = dout[ho, wo, co]
                            dw[i, j, ci, co] += v * d
                            g += weights[i, j, ci, co] * d
                        dimg[hi, wi, ci] += g
    return dw, db, dimg


@njit(cache=True)
def maxpool_forward(img, kh, kw, sh, sw):
    h_in, w_in, chans = img.shape
    h_out = (h_in - kh) // sh + 1
    w_out = (w_in - kw) // sw + 1
    out = np.empty((h_out, w_out, chans))
    for ho in range(h_out):
        for wo in range(w_out):
            for c in range(chans):
                m = img[ho * sh, wo * sw, c]
                for i in range(kh):
                    for j in range(kw):
                        v = img[ho * sh + i, wo * sw + j, c]
                        if v > m:
                            m = v
                out[ho, wo, c] = m
    return out


@njit(cache=True)
def maxpool_backward(img, dout, kh, kw, sh, sw):
    h_out, w_out, chans = dout.shape
    dimg = np.zeros_like(img)
    for ho in range(h_out):
        for wo in range(w_out):
            for c in range(chans):
                # first maximum in (row, col) scan order takes the gradient
                bi = 0
                bj = 0
                m = img[ho * sh, wo * sw, c]
                for i in range(kh):
                    for j in range(kw):
                        v = img[ho * sh + i, wo * sw + j, c]
                        if v > m:
                            m = v
                            bi = i
                            bj = j
                dimg[ho * sh + bi, wo * sw + bj, c] += dout[ho, wo, c]
    return dimg


@njit(cache=True)
def bilinear_sample(src, u, v):
    n_rows, n_cols, chans = src.shape
    h_out, w_out = u.shape
    out = np.empty((h_out, w_out, chans))
    for r in range(h_out):
        for q in range(w_out):
            x = u[r, q] - 0.5
            y = v[r, q] - 0.5
            x0 = np.floor(x)
            y0 = np.floor(y)
            fx = x - x0
            fy = y - y0
            ix = int(x0)
            iy = int(y0)
            x0i = min(max(ix, 0), n_cols - 1)
            x1i = min(max(ix + 1, 0), n_cols - 1)
            y0i = min(max(iy, 0), n_rows - 1)
            y1i = min(max(iy + 1, 0), n_rows - 1)
            for c in range(chans):
                p00 = src[y0i, x0i, c]
                p01 = src[y0i, x1i, c]
                p10 = src[y1i, x0i, c]
                p11 = src[y1i, x1i, c]
                top = p00 + fx * (p01 - p00)
                bot = p10 + fx * (p11 - p10)
                out[r, q, c] = top + fy * (bot - top)
    return out


@njit(cache=True)
def nearest_sample(src, u, v):
    n_rows, n_cols, chans = src.shape
    h_out, w_out = u.shape
    out = np.empty((h_out, w_out, chans))
    for r in range(h_out):
        for q in range(w_out):
            xi = min(max(int(np.floor(u[r, q])), 0), n_cols - 1)
            yi = min(max(int(np.floor(v[r, q])), 0), n_rows - 1)
            for c in range(chans):
                out[r, q, c] = src[yi, xi, c]
    return out
