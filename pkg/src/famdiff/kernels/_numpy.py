"""Vectorized numpy reference implementations of the hot kernels.

Arithmetic is ordered exactly like the numba twins in ``_numba.py`` (lerp as
``a + f * (b - a)``, convolution accumulated channel-major) so both backends
return bit-identical float64 results.
"""

import numpy as np


def _source_positions(out_n, in_n, align_corners):
    """Fractional source coordinate for each output index along one axis."""
    dst = np.arange(out_n, dtype=np.float64)
    if align_corners:
        if out_n == 1:
            return np.zeros(1, dtype=np.float64)
        pos = dst * (float(in_n - 1) / float(out_n - 1))
    else:
        pos = (dst + 0.5) * (float(in_n) / float(out_n)) - 0.5
    return np.clip(pos, 0.0, float(in_n - 1))


def nearest_upsample(src, out_h, out_w, align_corners):
    """Resample (c, h, w) float64 planes by nearest neighbour, ties rounding up."""
    c, in_h, in_w = src.shape
    ys = _source_positions(out_h, in_h, align_corners)
    xs = _source_positions(out_w, in_w, align_corners)
    yi = np.minimum(np.floor(ys + 0.5).astype(np.int64), in_h - 1)
    xi = np.minimum(np.floor(xs + 0.5).astype(np.int64), in_w - 1)
    return np.ascontiguousarray(src[:, yi[:, None], xi[None, :]])


def bilinear_upsample(src, out_h, out_w, align_corners):
    """Resample (c, h, w) float64 planes bilinearly with edge clamping."""
    c, in_h, in_w = src.shape
    ys = _source_positions(out_h, in_h, align_corners)
    xs = _source_positions(out_w, in_w, align_corners)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (ys - y0)[None, :, None]
    fx = (xs - x0)[None, None, :]
    tl = src[:, y0[:, None], x0[None, :]]
    tr = src[:, y0[:, None], x1[None, :]]
    bl = src[:, y1[:, None], x0[None, :]]
    br = src[:, y1[:, None], x1[None, :]]
    top = tl + fx * (tr - tl)
    bot = bl + fx * (br - bl)
    return top + fy * (bot - top)


def conv3x3_circular(src, weights, bias):
    """3x3 convolution with wrap-around padding.

    Args:
        src: (c_in, h, w) float64 input planes.
        weights: (c_out, c_in, 3, 3) float64 filter bank.
        bias: (c_out,) float64 per-channel offset.

    Returns:
        (c_out, h, w) float64 output planes.
    """
    c_out, c_in = weights.shape[:2]
    h, w = src.shape[1], src.shape[2]
    shifted = np.empty((c_in, 3, 3, h, w), dtype=np.float64)
    for ic in range(c_in):
        for ky in range(3):
            for kx in range(3):
                shifted[ic, ky, kx] = np.roll(src[ic], (1 - ky, 1 - kx), axis=(0, 1))
    out = np.empty((c_out, h, w), dtype=np.float64)
    for oc in range(c_out):
        acc = np.full((h, w), bias[oc], dtype=np.float64)
        for ic in range(c_in):
            for ky in range(3):
                for kx in range(3):
                    acc += weights[oc, ic, ky, kx] * shifted[ic, ky, kx]
        out[oc] = acc
    return out
