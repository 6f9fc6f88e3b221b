"""numba-compiled twins of the kernels in ``_numpy.py``.

Each function performs the identical floating-point operations in the same
order as its numpy counterpart, only stated as scalar loops; the outputs must
match bit-for-bit, which the test suite asserts.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _source_position(dst, out_n, in_n, align_corners):
    if align_corners:
        if out_n == 1:
            return 0.0
        pos = dst * (float(in_n - 1) / float(out_n - 1))
    else:
        pos = (dst + 0.5) * (float(in_n) / float(out_n)) - 0.5
    if pos < 0.0:
        pos = 0.0
    hi = float(in_n - 1)
    if pos > hi:
        pos = hi
    return pos


@njit(cache=True)
def nearest_upsample(src, out_h, out_w, align_corners):
    c, in_h, in_w = src.shape
    out = np.empty((c, out_h, out_w), dtype=np.float64)
    yi = np.empty(out_h, dtype=np.int64)
    xi = np.empty(out_w, dtype=np.int64)
    for y in range(out_h):
        pos = _source_position(float(y), out_h, in_h, align_corners)
        idx = int(np.floor(pos + 0.5))
        yi[y] = min(idx, in_h - 1)
    for x in range(out_w):
        pos = _source_position(float(x), out_w, in_w, align_corners)
        idx = int(np.floor(pos + 0.5))
        xi[x] = min(idx, in_w - 1)
    for k in range(c):
        for y in range(out_h):
            for x in range(out_w):
                out[k, y, x] = src[k, yi[y], xi[x]]
    return out


@njit(cache=True)
def bilinear_upsample(src, out_h, out_w, align_corners):
    c, in_h, in_w = src.shape
    out = np.empty((c, out_h, out_w), dtype=np.float64)
    y0 = np.empty(out_h, dtype=np.int64)
    y1 = np.empty(out_h, dtype=np.int64)
    fy = np.empty(out_h, dtype=np.float64)
    for y in range(out_h):
        pos = _source_position(float(y), out_h, in_h, align_corners)
        lo = int(np.floor(pos))
        y0[y] = lo
        y1[y] = min(lo + 1, in_h - 1)
        fy[y] = pos - lo
    x0 = np.empty(out_w, dtype=np.int64)
    x1 = np.empty(out_w, dtype=np.int64)
    fx = np.empty(out_w, dtype=np.float64)
    for x in range(out_w):
        pos = _source_position(float(x), out_w, in_w, align_corners)
        lo = int(np.floor(pos))
        x0[x] = lo
        x1[x] = min(lo + 1, in_w - 1)
        fx[x] = pos - lo
    for k in range(c):
        for y in range(out_h):
            for x in range(out_w):
                tl = src[k, y0[y], x0[x]]
                tr = src[k, y0[y], x1[x]]
                bl = src[k, y1[y], x0[x]]
                br = src[k, y1[y], x1[x]]
                top = tl + fx[x] * (tr - tl)
                bot = bl + fx[x] * (br - bl)
                out[k, y, x] = top + fy[y] * (bot - top)
    return out


@njit(cache=True)
def conv3x3_circular(src, weights, bias):
    c_out = weights.shape[0]
    c_in = weights.shape[1]
    h = src.shape[1]
    w = src.shape[2]
    out = np.empty((c_out, h, w), dtype=np.float64)
    for oc in range(c_out):
        for y in range(h):
            for x in range(w):
                acc = bias[oc]
                for ic in range(c_in):
                    for ky in range(3):
                        yy = (y + ky - 1) % h
                        for kx in range(3):
                            xx = (x + kx - 1) % w
                            acc += weights[oc, ic, ky, kx] * src[ic, yy, xx]
                out[oc, y, x] = acc
    return out
