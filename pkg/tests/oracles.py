"""Independent reference implementations used to cross-check the package.

Everything here is written the slow, obvious way (explicit loops, textbook
formulas) and deliberately shares no code with famdiff, so agreement between
the two is meaningful evidence rather than a tautology.
"""

import cmath
import math

import numpy as np


def naive_dft2(x):
    """Unnormalized 2D DFT by direct double summation, O(n^4)."""
    x = np.asarray(x)
    h, w = x.shape
    out = np.zeros((h, w), dtype=np.complex128)
    for ky in range(h):
        for kx in range(w):
            acc = 0j
            for y in range(h):
                for x_ in range(w):
                    ang = -2.0 * math.pi * (ky * y / h + kx * x_ / w)
                    acc += x[y, x_] * cmath.exp(1j * ang)
            out[ky, kx] = acc
    return out


def naive_idft2(X):
    """Inverse of naive_dft2 with the 1/(h*w) normalization on the inverse."""
    X = np.asarray(X, dtype=np.complex128)
    h, w = X.shape
    out = np.zeros((h, w), dtype=np.complex128)
    for y in range(h):
        for x_ in range(w):
            acc = 0j
            for ky in range(h):
                for kx in range(w):
                    ang = 2.0 * math.pi * (ky * y / h + kx * x_ / w)
                    acc += X[ky, kx] * cmath.exp(1j * ang)
            out[y, x_] = acc / (h * w)
    return out


def naive_circular_conv(x, k):
    """Wrap-around convolution out[n] = sum_m x[m] * k[(n - m) mod N]."""
    x = np.asarray(x, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    h, w = x.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x_ in range(w):
            acc = 0.0
            for my in range(h):
                for mx in range(w):
                    acc += x[my, mx] * k[(y - my) % h, (x_ - mx) % w]
            out[y, x_] = acc
    return out


def mask_value(height, width, cutoff, t, T, y, x):
    """Centered-layout high-pass mask entry evaluated directly per pixel."""
    rho = t / T
    tau_h = height * cutoff * (1.0 - rho)
    tau_w = width * cutoff * (1.0 - rho)
    yc = height // 2
    xc = width // 2
    inside = abs(y - yc) < tau_h / 2.0 and abs(x - xc) < tau_w / 2.0
    return rho if inside else 1.0


def mask_grid(height, width, cutoff, t, T):
    """Full centered-layout mask from mask_value."""
    out = np.empty((height, width))
    for y in range(height):
        for x in range(width):
            out[y, x] = mask_value(height, width, cutoff, t, T, y, x)
    return out


def _source_pos(d, out_n, in_n, align_corners):
    if align_corners:
        if out_n == 1:
            return 0.0
        pos = d * (float(in_n - 1) / float(out_n - 1))
    else:
        pos = (d + 0.5) * (float(in_n) / float(out_n)) - 0.5
    return min(max(pos, 0.0), in_n - 1.0)


def nearest_ref(src, out_h, out_w, align_corners):
    """Scalar-loop nearest-neighbor resampler from the documented formulas."""
    src = np.asarray(src, dtype=np.float64)
    c, in_h, in_w = src.shape
    out = np.empty((c, out_h, out_w))
    for ch in range(c):
        for y in range(out_h):
            sy = min(int(math.floor(_source_pos(y, out_h, in_h, align_corners) + 0.5)), in_h - 1)
            for x in range(out_w):
                sx = min(int(math.floor(_source_pos(x, out_w, in_w, align_corners) + 0.5)), in_w - 1)
                out[ch, y, x] = src[ch, sy, sx]
    return out


def bilinear_ref(src, out_h, out_w, align_corners):
    """Scalar-loop bilinear resampler using the lerp form a + f * (b - a)."""
    src = np.asarray(src, dtype=np.float64)
    c, in_h, in_w = src.shape
    out = np.empty((c, out_h, out_w))
    for ch in range(c):
        for y in range(out_h):
            py = _source_pos(y, out_h, in_h, align_corners)
            y0 = int(math.floor(py))
            y1 = min(y0 + 1, in_h - 1)
            fy = py - y0
            for x in range(out_w):
                px = _source_pos(x, out_w, in_w, align_corners)
                x0 = int(math.floor(px))
                x1 = min(x0 + 1, in_w - 1)
                fx = px - x0
                top = src[ch, y0, x0] + fx * (src[ch, y0, x1] - src[ch, y0, x0])
                bot = src[ch, y1, x0] + fx * (src[ch, y1, x1] - src[ch, y1, x0])
                out[ch, y, x] = top + fy * (bot - top)
    return out


def conv3x3_ref(src, weights, bias):
    """Scalar-loop circular 3x3 convolution."""
    src = np.asarray(src, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    ic, h, w = src.shape
    oc = weights.shape[0]
    out = np.empty((oc, h, w))
    for o in range(oc):
        for y in range(h):
            for x in range(w):
                acc = bias[o]
                for i in range(ic):
                    for ky in range(3):
                        for kx in range(3):
                            acc += weights[o, i, ky, kx] * src[i, (y + ky - 1) % h, (x + kx - 1) % w]
                out[o, y, x] = acc
    return out


def softmax_rows_ref(scores):
    """Row softmax with the max-shift trick, scalar loops."""
    scores = np.asarray(scores, dtype=np.float64)
    n, m = scores.shape
    out = np.empty((n, m))
    for i in range(n):
        hi = max(scores[i])
        exps = [math.exp(v - hi) for v in scores[i]]
        s = sum(exps)
        out[i] = [e / s for e in exps]
    return out


def posterior_eps_bin(z_bin, m_bin, p_bin, abar):
    """Per-bin noise posterior mean for a Gaussian spectral prior.

    With prior Z0 ~ CN(m, p) per bin and Z_t = sqrt(abar) Z0 + sqrt(1-abar) E,
    E[E | Z_t] = sqrt(1-abar) * (Z_t - sqrt(abar) m) / (abar p + 1 - abar).
    """
    return math.sqrt(1.0 - abar) * (z_bin - math.sqrt(abar) * m_bin) / (abar * p_bin + 1.0 - abar)


def posterior_z0_bin(z_bin, m_bin, p_bin, abar):
    """Per-bin E[Z0 | Z_t] under the same conjugate model."""
    return m_bin + math.sqrt(abar) * p_bin * (z_bin - math.sqrt(abar) * m_bin) / (
        abar * p_bin + 1.0 - abar
    )


def ddim_scalar(z, eps, abar_t, abar_prev):
    """Textbook deterministic update: rebuild z0, re-noise at the lower level."""
    z0 = (z - math.sqrt(1.0 - abar_t) * eps) / math.sqrt(abar_t)
    return math.sqrt(abar_prev) * z0 + math.sqrt(1.0 - abar_prev) * eps


def affine_chain_coeffs(ts, alphas_bar, p_bin):
    """Coefficients (A, B) with z_final = A * z_init + B * m_hat for one bin.

    Each deterministic step with the conjugate posterior noise estimate is an
    affine map per frequency bin; composing the whole descending schedule
    therefore stays affine. Returns the composed coefficients.
    """
    A, B = 1.0, 0.0
    for i, t in enumerate(ts):
        abar = alphas_bar[t]
        abar_prev = alphas_bar[ts[i + 1]] if i + 1 < len(ts) else 1.0
        a = math.sqrt(abar_prev / abar)
        b = math.sqrt(1.0 - abar_prev) - a * math.sqrt(1.0 - abar)
        coef = math.sqrt(1.0 - abar) / (abar * p_bin + 1.0 - abar)
        s = a + b * coef
        d = -b * coef * math.sqrt(abar)
        A, B = s * A, s * B + d
    return A, B
