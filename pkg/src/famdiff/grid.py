"""Dense per-channel 2D tensors with exact-size DFT, circular convolution,
and spatial resampling. Everything downstream is built on these values.

Grids are immutable: constructors copy and freeze their buffers, so instances
are safe to share across threads without locking.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import NumericError, ParameterError, SizeError, SpectralAsymmetryError

MODES = ("nearest", "bilinear")
ALIGNMENTS = ("align-corners", "half-pixel")


def _frozen_copy(data, dtype):
    out = np.array(data, dtype=dtype, order="C", copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class LatentGrid:
    """A channels x height x width real-valued field, stored as float64."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise SizeError(f"latent grid must be 3D (c, h, w), got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise SizeError(f"latent grid dimensions must be >= 1, got {arr.shape}")
        arr = _frozen_copy(arr, np.float64)
        if not np.isfinite(arr).all():
            raise NumericError("latent grid contains NaN or Inf")
        object.__setattr__(self, "data", arr)

    @property
    def channels(self):
        return self.data.shape[0]

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Per-channel complex frequency coefficients of a LatentGrid.

    ``shifted`` records whether the DC bin sits at (floor(h/2), floor(w/2))
    (DC-centered layout) or at (0, 0) (natural layout).
    """

    data: np.ndarray
    shifted: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise SizeError(f"spectral grid must be 3D (c, h, w), got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise SizeError(f"spectral grid dimensions must be >= 1, got {arr.shape}")
        arr = _frozen_copy(arr, np.complex128)
        if not np.isfinite(arr).all():
            raise NumericError("spectral grid contains NaN or Inf")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "shifted", bool(self.shifted))

    @property
    def channels(self):
        return self.data.shape[0]

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]


@dataclass(frozen=True)
class ResampleSpec:
    """How to resize a grid: exact rational scale per axis, mode, alignment."""

    scale_h: Fraction
    scale_w: Fraction
    mode: str = "bilinear"
    alignment: str = "half-pixel"

    def __post_init__(self):
        for name in ("scale_h", "scale_w"):
            value = getattr(self, name)
            if not isinstance(value, Fraction):
                object.__setattr__(self, name, Fraction(value))
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive, got {value}")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.alignment not in ALIGNMENTS:
            raise ParameterError(
                f"alignment must be one of {ALIGNMENTS}, got {self.alignment!r}"
            )

    @classmethod
    def isotropic(cls, scale, mode="bilinear", alignment="half-pixel"):
        s = Fraction(scale)
        return cls(scale_h=s, scale_w=s, mode=mode, alignment=alignment)

    def output_dims(self, height, width):
        """Output (h, w) after scaling, rounding halves up."""
        out_h = _scaled_dim(height, self.scale_h)
        out_w = _scaled_dim(width, self.scale_w)
        if out_h < 1 or out_w < 1:
            raise SizeError(f"resample of {height}x{width} yields empty {out_h}x{out_w}")
        return out_h, out_w


def _scaled_dim(n, scale):
    # round(n * scale) with exact integer arithmetic, half away from zero
    num, den = scale.numerator, scale.denominator
    return (2 * n * num + den) // (2 * den)


def dft2(x: LatentGrid) -> SpectralGrid:
    """Per-channel 2D discrete Fourier transform.

    Forward transform is unnormalized, output layout is natural (DC at the
    (0, 0) bin of each channel).

    Args:
        x: real-valued input grid.

    Returns:
        SpectralGrid with ``shifted=False``.
    """
    return SpectralGrid(np.fft.fft2(x.data, axes=(-2, -1)), shifted=False)


def idft2(X: SpectralGrid) -> LatentGrid:
    """Inverse per-channel 2D DFT with 1/(h*w) normalization.

    The input must be in natural layout (callers unshift first). The
    imaginary part of the result is discarded only when it is negligible
    next to the real part; a large residue means something upstream broke
    the conjugate symmetry of a real field's spectrum.

    Args:
        X: unshifted spectrum.

    Returns:
        Real-valued LatentGrid.

    Raises:
        ParameterError: if X is in DC-centered layout.
        SpectralAsymmetryError: if the imaginary residue exceeds
            1e-9 x the maximum real magnitude.
    """
    if X.shifted:
        raise ParameterError("idft2 requires natural layout; apply ifftshift first")
    full = np.fft.ifft2(X.data, axes=(-2, -1))
    max_real = float(np.abs(full.real).max())
    max_imag = float(np.abs(full.imag).max())
    if max_imag > 1e-9 * max_real:
        raise SpectralAsymmetryError(
            f"imaginary residue {max_imag:.3e} exceeds 1e-9 x max real {max_real:.3e}"
        )
    return LatentGrid(full.real)


def fftshift(X: SpectralGrid) -> SpectralGrid:
    """Move the DC bin to (floor(h/2), floor(w/2)) in every channel."""
    return SpectralGrid(np.fft.fftshift(X.data, axes=(-2, -1)), shifted=True)


def ifftshift(X: SpectralGrid) -> SpectralGrid:
    """Undo fftshift exactly, for odd sizes as well as even."""
    return SpectralGrid(np.fft.ifftshift(X.data, axes=(-2, -1)), shifted=False)


def circular_conv(x: LatentGrid, kernel: np.ndarray) -> LatentGrid:
    """Per-channel circular (wrap-around) convolution with a real kernel.

    Computed as an FFT product, which equals the naive wrap-around double
    sum for a kernel of the same size as the grid.

    Args:
        x: input grid.
        kernel: real (h, w) array matching the grid's spatial dims.

    Returns:
        Convolved LatentGrid.

    Raises:
        SizeError: if kernel dims differ from grid dims.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.shape != (x.height, x.width):
        raise SizeError(
            f"kernel shape {kernel.shape} does not match grid {(x.height, x.width)}"
        )
    product = np.fft.fft2(x.data, axes=(-2, -1)) * np.fft.fft2(kernel)
    return idft2(SpectralGrid(product, shifted=False))


def upsample(x: LatentGrid, spec: ResampleSpec) -> LatentGrid:
    """Resample a grid to round(dims x scale) using the given mode/alignment.

    Scale 1 returns a bit-identical copy; constant inputs stay constant in
    either mode; align-corners with integer scale preserves corner samples.

    Args:
        x: input grid.
        spec: scale factors, interpolation mode, and sample alignment.

    Returns:
        Resampled LatentGrid.

    Raises:
        ParameterError: if either scale factor is below 1.
        SizeError: if the output would be empty.
    """
    if spec.scale_h < 1 or spec.scale_w < 1:
        raise ParameterError("upsample requires scale >= 1 on both axes")
    out_h, out_w = spec.output_dims(x.height, x.width)
    align = spec.alignment == "align-corners"
    if spec.mode == "nearest":
        out = kernels.nearest_upsample(x.data, out_h, out_w, align)
    else:
        out = kernels.bilinear_upsample(x.data, out_h, out_w, align)
    return LatentGrid(out)
