"""Frequency-domain guidance: the time-varying high-pass filter, the mixing
function in spectral and convolutional forms, and the weighted skip-residual
baseline.

The filter mask lives in DC-centered layout. At step t it equals rho = t/T
inside an open centered rectangle whose extents shrink linearly as t grows,
and 1 outside, so low frequencies are steered progressively harder toward the
reference latent as sampling approaches t = 0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SizeError
from .grid import LatentGrid, SpectralGrid, circular_conv, idft2

GUIDANCE_VARIANTS = ("none", "frequency_modulation", "skip_residual")


@dataclass(frozen=True)
class FilterParams:
    """Construction parameters shared by every per-step filter of a run."""

    T: int
    height: int
    width: int
    cutoff_c: float = 0.5

    def __post_init__(self):
        if self.T < 1:
            raise ParameterError(f"T must be >= 1, got {self.T}")
        if self.height < 1 or self.width < 1:
            raise SizeError(f"filter dims must be >= 1, got {self.height}x{self.width}")
        if not (0.0 <= self.cutoff_c <= 1.0):
            raise ParameterError(f"cutoff_c must be in [0, 1], got {self.cutoff_c}")


@dataclass(frozen=True, eq=False)
class HighPassFilter:
    """The mask for one step: inside_value on an open centered rectangle, 1 outside."""

    mask: np.ndarray
    t: int
    inside_value: float
    rect_half_h: float
    rect_half_w: float

    def __post_init__(self):
        arr = np.array(self.mask, dtype=np.float64, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "mask", arr)

    @property
    def height(self):
        return self.mask.shape[0]

    @property
    def width(self):
        return self.mask.shape[1]


@dataclass(frozen=True)
class GuidanceMode:
    """Which mixing function steers the high-resolution chain."""

    variant: str = "frequency_modulation"
    skip_alpha: float = 1.0

    def __post_init__(self):
        if self.variant not in GUIDANCE_VARIANTS:
            raise ParameterError(
                f"variant must be one of {GUIDANCE_VARIANTS}, got {self.variant!r}"
            )
        if not (0.0 <= self.skip_alpha <= 1.0):
            raise ParameterError(f"skip_alpha must be in [0, 1], got {self.skip_alpha}")


def make_filter(params: FilterParams, t: int) -> HighPassFilter:
    """Build the DC-centered mask for step t.

    rho = t/T; the rectangle half-extents are (h*c/2)(1 - rho) and
    (w*c/2)(1 - rho); bins strictly inside get rho, all others 1. The center
    is (floor(w/2), floor(h/2)), matching the shifted-spectrum DC bin.

    Raises:
        ParameterError: if t is outside [0, T].
    """
    if not (0 <= t <= params.T):
        raise ParameterError(f"step {t} outside [0, {params.T}]")
    rho = t / params.T
    tau_h = params.height * params.cutoff_c * (1.0 - rho)
    tau_w = params.width * params.cutoff_c * (1.0 - rho)
    y_c = params.height // 2
    x_c = params.width // 2
    dy = np.abs(np.arange(params.height, dtype=np.float64) - y_c)
    dx = np.abs(np.arange(params.width, dtype=np.float64) - x_c)
    inside = (dy[:, None] < tau_h / 2.0) & (dx[None, :] < tau_w / 2.0)
    mask = np.where(inside, rho, 1.0)
    return HighPassFilter(
        mask=mask, t=t, inside_value=rho,
        rect_half_h=tau_h / 2.0, rect_half_w=tau_w / 2.0,
    )


def unshifted_mask(filt: HighPassFilter) -> np.ndarray:
    """The mask permuted to natural layout (DC at bin (0, 0))."""
    return np.fft.ifftshift(filt.mask)


def _check_pair(z_denoised: LatentGrid, z_diffused: LatentGrid, filt: HighPassFilter) -> None:
    if z_denoised.data.shape != z_diffused.data.shape:
        raise SizeError(
            f"latent shapes differ: {z_denoised.data.shape} vs {z_diffused.data.shape}"
        )
    if (z_denoised.height, z_denoised.width) != (filt.height, filt.width):
        raise SizeError(
            f"filter {filt.height}x{filt.width} does not match latents "
            f"{z_denoised.height}x{z_denoised.width}"
        )


def fm_mix(z_denoised: LatentGrid, z_diffused: LatentGrid, filt: HighPassFilter) -> LatentGrid:
    """Blend two latents in the frequency domain through the filter mask.

    The denoised latent keeps the bins where the mask is 1; inside the
    rectangle the spectra are mixed mask : (1 - mask) toward the diffused
    latent. Equivalent to the convolutional form in fm_mix_conv.

    Args:
        z_denoised: latent whose high frequencies are kept.
        z_diffused: reference latent supplying low frequencies.
        filt: per-step mask from make_filter.

    Returns:
        Mixed real latent.

    Raises:
        SizeError: on any dimension mismatch.
        SpectralAsymmetryError: if the mixed spectrum stops being conjugate
            symmetric (propagated from the inverse transform).
    """
    _check_pair(z_denoised, z_diffused, filt)
    ku = unshifted_mask(filt)
    spec_den = np.fft.fft2(z_denoised.data, axes=(-2, -1))
    spec_dif = np.fft.fft2(z_diffused.data, axes=(-2, -1))
    mixed = ku * spec_den + (1.0 - ku) * spec_dif
    return idft2(SpectralGrid(mixed, shifted=False))


def filter_to_kernel(filt: HighPassFilter) -> np.ndarray:
    """Spatial kernel whose circular convolution applies (1 - mask).

    Computed as the inverse transform of the unshifted complement mask; the
    kernel sums to the complement's DC value, 1 - rho.

    Raises:
        SpectralAsymmetryError: if the residue bound of the inverse
            transform is exceeded.
    """
    complement = np.fft.ifftshift(1.0 - filt.mask)
    grid = idft2(SpectralGrid(complement[None].astype(np.complex128), shifted=False))
    return grid.data[0]


def fm_mix_conv(z_denoised: LatentGrid, z_diffused: LatentGrid, filt: HighPassFilter) -> LatentGrid:
    """Time-domain form of fm_mix: add a low-passed copy of the difference.

    Returns z_denoised + kernel (*) (z_diffused - z_denoised) where (*) is
    circular convolution and the kernel comes from filter_to_kernel.

    Raises:
        SizeError: on any dimension mismatch.
    """
    _check_pair(z_denoised, z_diffused, filt)
    kernel = filter_to_kernel(filt)
    diff = LatentGrid(z_diffused.data - z_denoised.data)
    update = circular_conv(diff, kernel)
    return LatentGrid(z_denoised.data + update.data)


def skip_residual_mix(
    z_denoised: LatentGrid,
    z_diffused: LatentGrid,
    t: int,
    T: int,
    alpha_exp: float = 1.0,
) -> LatentGrid:
    """Scalar cosine-decay blend used as the guidance baseline.

    c1 = ((1 + cos(pi (T - t)/T)) / 2) ** alpha_exp weights the diffused
    latent; 1 - c1 weights the denoised one. c1 runs from 1 at t = T to 0
    at t = 0.
    """
    if z_denoised.data.shape != z_diffused.data.shape:
        raise SizeError(
            f"latent shapes differ: {z_denoised.data.shape} vs {z_diffused.data.shape}"
        )
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    c1 = ((1.0 + np.cos(np.pi * (T - t) / T)) / 2.0) ** alpha_exp
    return LatentGrid(c1 * z_diffused.data + (1.0 - c1) * z_denoised.data)
