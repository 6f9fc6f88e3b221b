"""Denoiser backends implementing the noise-estimator contract.

Two backends: an analytic Gaussian-field denoiser that returns the exact
posterior-expected noise per frequency bin (the verification oracle for the
whole pipeline), and a fixed-weight toy convolutional net with one
self-attention block per stage (the host for attention capture and replay).
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .attention import TOKEN_CAP, apply_attention, softmax_attention
from .errors import CapacityError, ParameterError, ShapeError, SizeError
from .grid import LatentGrid, SpectralGrid, idft2
from .rng import STREAM_WEIGHTS, NoiseSource
from .schedule import NoiseSchedule

DENOISER_KINDS = ("analytic_gaussian", "toy_attention_net")


@dataclass(frozen=True, eq=False)
class DenoiserOutput:
    """What a denoiser returns: the predicted noise for one latent."""

    eps_hat: LatentGrid


# ---------------------------------------------------------------------------
# analytic Gaussian-field backend


@dataclass(frozen=True, eq=False)
class GaussianFieldModel:
    """Stationary Gaussian prior: scalar mean plus per-bin power spectrum.

    ``power`` uses the convention that unit white noise has power 1 in every
    bin. The spectrum must be symmetric under frequency negation (bin k and
    bin -k mod n equal), the condition for the field itself to be real;
    construction symmetrizes exact-roundoff differences and rejects more.
    """

    mean: float
    power: np.ndarray
    profile: tuple = None

    def __post_init__(self):
        arr = np.array(self.power, dtype=np.float64, copy=True)
        if arr.ndim != 2 or min(arr.shape) < 1:
            raise SizeError(f"power spectrum must be 2D, got shape {arr.shape}")
        flipped = arr[_neg_freq_index(arr.shape[0])][:, _neg_freq_index(arr.shape[1])]
        if not np.allclose(arr, flipped, rtol=1e-9, atol=0.0):
            raise ParameterError("power spectrum must be symmetric under k -> -k")
        arr = (arr + flipped) / 2.0
        if arr.min() <= 0.0:
            raise ParameterError("power spectrum entries must be > 0")
        arr.flags.writeable = False
        object.__setattr__(self, "power", arr)
        object.__setattr__(self, "mean", float(self.mean))

    @property
    def height(self):
        return self.power.shape[0]

    @property
    def width(self):
        return self.power.shape[1]

    @classmethod
    def white(cls, mean: float, height: int, width: int, scale: float = 1.0):
        """Flat spectrum: an iid N(mean, scale) field."""
        power = np.full((height, width), float(scale))
        return cls(mean=mean, power=power, profile=("white", float(scale)))

    @classmethod
    def smooth(cls, mean: float, height: int, width: int, strength: float = 4.0):
        """Low-frequency-heavy spectrum built from a separable cosine profile."""
        fy = np.cos(2.0 * np.pi * np.arange(height) / height)
        fx = np.cos(2.0 * np.pi * np.arange(width) / width)
        ridge = (2.0 - fy[:, None] - fx[None, :]) / 4.0
        power = 1.0 / (1.0 + strength * ridge)
        return cls(mean=mean, power=power, profile=("smooth", float(strength)))


def _neg_freq_index(n: int) -> np.ndarray:
    return (-np.arange(n)) % n


def rescale_gaussian(model: GaussianFieldModel, height: int, width: int) -> GaussianFieldModel:
    """The same prior family instantiated at other spatial dims.

    Requires a model built from a named profile (white/smooth); an arbitrary
    spectrum has no canonical counterpart at a different size.

    Raises:
        ParameterError: for profile-less models at changed dims.
    """
    if (height, width) == (model.height, model.width):
        return model
    if model.profile is None:
        raise ParameterError("cannot rescale a custom-spectrum model; use white/smooth")
    name, value = model.profile
    if name == "white":
        return GaussianFieldModel.white(model.mean, height, width, scale=value)
    return GaussianFieldModel.smooth(model.mean, height, width, strength=value)


def _mean_spectrum(model: GaussianFieldModel) -> np.ndarray:
    mhat = np.zeros((model.height, model.width), dtype=np.complex128)
    mhat[0, 0] = model.mean * model.height * model.width
    return mhat


def sample_field(model: GaussianFieldModel, channels: int, gen: np.random.Generator) -> LatentGrid:
    """Draw a field from the prior by shaping white noise in the frequency domain."""
    white = gen.standard_normal((channels, model.height, model.width))
    shaped = np.fft.fft2(white, axes=(-2, -1)) * np.sqrt(model.power)
    return LatentGrid(model.mean + idft2(SpectralGrid(shaped)).data)


def analytic_eps_spectral(Z: np.ndarray, t: int, sched: NoiseSchedule, model: GaussianFieldModel) -> np.ndarray:
    """Posterior-expected noise spectrum for spectrum Z of z_t (see analytic_eps)."""
    abar = sched.alpha_bar(t)
    coef = np.sqrt(1.0 - abar) / (abar * model.power + (1.0 - abar))
    return coef * (Z - np.sqrt(abar) * _mean_spectrum(model))


def analytic_eps(z_t: LatentGrid, t: int, sched: NoiseSchedule, model: GaussianFieldModel) -> DenoiserOutput:
    """Exact posterior-expected noise E[eps | z_t] under the Gaussian prior.

    Derivation (per frequency bin, verified against a Monte-Carlo posterior):
    the forward process gives Z_t = sqrt(abar) Z_0 + sqrt(1-abar) E with
    Z_0 ~ N(Mhat, h w p) and E white of spectral variance h w per bin, all
    jointly Gaussian. Conditioning bin by bin,

        E[E | Z_t] = sqrt(1-abar) (Z_t - sqrt(abar) Mhat) / (abar p + 1 - abar)

    where p is the prior power with white == 1, so the h w factors cancel.
    The result is inverse-transformed back to a real grid.

    Raises:
        SizeError: if the model spectrum does not match z_t's spatial dims.
    """
    if (z_t.height, z_t.width) != (model.height, model.width):
        raise SizeError(
            f"model spectrum {model.height}x{model.width} does not match "
            f"latent {z_t.height}x{z_t.width}"
        )
    Z = np.fft.fft2(z_t.data, axes=(-2, -1))
    eps_spec = analytic_eps_spectral(Z, t, sched, model)
    return DenoiserOutput(eps_hat=idft2(SpectralGrid(eps_spec)))


# ---------------------------------------------------------------------------
# toy attention net backend

HIDDEN = 8
EMB_FEATURES = 8
BLOCK_LABELS = ("down_block_0", "mid_block", "up_block_0")


@dataclass(frozen=True, eq=False)
class ToyAttentionNet:
    """Fixed-weight conv net, one downsampling level, attention per stage.

    Stages run at the declared (height, width): conv in, a down stage with
    attention at full resolution, average-pool to half resolution for the mid
    stage, then repeat-upsample, skip-add, and an up stage whose attention
    block is the usual modulation target. All convolutions pad circularly, so
    the net commutes exactly with even cyclic shifts of its input.
    """

    seed: int
    channels: int
    height: int
    width: int
    weights: dict = field(repr=False, default=None)

    def __post_init__(self):
        if self.channels < 1:
            raise SizeError(f"channels must be >= 1, got {self.channels}")
        if self.height < 2 or self.width < 2 or self.height % 2 or self.width % 2:
            raise ShapeError(
                f"net dims must be even and >= 2, got {self.height}x{self.width}"
            )
        if self.height * self.width > TOKEN_CAP:
            raise CapacityError(
                f"full-resolution stage needs {self.height * self.width} tokens, "
                f"cap is {TOKEN_CAP}"
            )
        if self.weights is None:
            object.__setattr__(self, "weights", _draw_weights(self.seed, self.channels))

    def describe(self) -> str:
        """One-line architecture summary recorded in run manifests."""
        return (
            f"toy_attention_net(seed={self.seed}, channels={self.channels}, "
            f"dims={self.height}x{self.width}, hidden={HIDDEN}, "
            f"blocks={'/'.join(BLOCK_LABELS)})"
        )


def _draw_weights(seed: int, channels: int) -> dict:
    gen = NoiseSource(seed).generator(STREAM_WEIGHTS, 0)

    def conv(c_out, c_in):
        scale = 0.3 / np.sqrt(c_in * 9.0)
        return (
            gen.standard_normal((c_out, c_in, 3, 3)) * scale,
            gen.standard_normal(c_out) * 0.01,
        )

    def linear(c_out, c_in):
        return gen.standard_normal((c_out, c_in)) * (0.3 / np.sqrt(c_in))

    weights = {}
    weights["conv_in"] = conv(HIDDEN, channels)
    weights["temb"] = linear(HIDDEN, EMB_FEATURES)
    weights["conv_down"] = conv(HIDDEN, HIDDEN)
    weights["conv_mid"] = conv(HIDDEN, HIDDEN)
    weights["conv_up"] = conv(HIDDEN, HIDDEN)
    for label in BLOCK_LABELS:
        weights[f"attn_{label}"] = (
            linear(HIDDEN, HIDDEN),
            linear(HIDDEN, HIDDEN),
            linear(HIDDEN, HIDDEN),
        )
    weights["conv_out"] = conv(channels, HIDDEN)
    return weights


def resolution_adapt(spec: ToyAttentionNet, s: int) -> ToyAttentionNet:
    """The same weights declared for s-times larger inputs.

    Raises:
        ParameterError: if s < 1.
        CapacityError: if the scaled token grid exceeds the dense cap.
    """
    if s < 1:
        raise ParameterError(f"scale must be >= 1, got {s}")
    return ToyAttentionNet(
        seed=spec.seed,
        channels=spec.channels,
        height=spec.height * s,
        width=spec.width * s,
        weights=spec.weights,
    )


def _time_features(t: int, T_hint: float = 1000.0) -> np.ndarray:
    k = np.arange(EMB_FEATURES // 2, dtype=np.float64)
    freqs = T_hint ** (-2.0 * k / EMB_FEATURES)
    angles = t * freqs
    return np.concatenate([np.sin(angles), np.cos(angles)])


def _attention_stage(x: np.ndarray, label: str, weights: dict, taps) -> np.ndarray:
    f, h, w = x.shape
    wq, wk, wv = weights[f"attn_{label}"]
    tokens = x.reshape(f, h * w).T
    Q = tokens @ wq.T
    K = tokens @ wk.T
    V = tokens @ wv.T
    _, matrix = softmax_attention(Q, K, V, h, w)
    if taps is not None:
        matrix = taps.on_attention(label, matrix)
    attended = apply_attention(matrix, V)
    return x + attended.T.reshape(f, h, w)


def toy_net_eps(z_t: LatentGrid, t: int, spec: ToyAttentionNet, taps=None) -> DenoiserOutput:
    """Run the toy net; deterministic in (weights seed, z_t, t).

    When a tap session is supplied, each target attention block routes its
    matrix through the session, which may substitute the modulated one.

    Raises:
        ShapeError: if z_t dims do not match the net's declared dims.
    """
    if (z_t.channels, z_t.height, z_t.width) != (spec.channels, spec.height, spec.width):
        raise ShapeError(
            f"latent {z_t.channels}x{z_t.height}x{z_t.width} does not match net "
            f"{spec.channels}x{spec.height}x{spec.width}"
        )
    wts = spec.weights
    w_in, b_in = wts["conv_in"]
    x = kernels.conv3x3_circular(z_t.data, w_in, b_in)
    emb = wts["temb"] @ _time_features(t)
    x = np.tanh(x + emb[:, None, None])

    w_d, b_d = wts["conv_down"]
    x = np.tanh(kernels.conv3x3_circular(x, w_d, b_d))
    x = _attention_stage(x, "down_block_0", wts, taps)
    skip = x

    # average-pool 2x2, run the mid stage at half resolution
    h2, w2 = spec.height // 2, spec.width // 2
    pooled = x.reshape(HIDDEN, h2, 2, w2, 2).mean(axis=(2, 4))
    w_m, b_m = wts["conv_mid"]
    y = np.tanh(kernels.conv3x3_circular(pooled, w_m, b_m))
    y = _attention_stage(y, "mid_block", wts, taps)

    # repeat-upsample back to full resolution and add the skip
    up = np.repeat(np.repeat(y, 2, axis=1), 2, axis=2)
    x = up + skip
    w_u, b_u = wts["conv_up"]
    x = np.tanh(kernels.conv3x3_circular(x, w_u, b_u))
    x = _attention_stage(x, "up_block_0", wts, taps)

    w_o, b_o = wts["conv_out"]
    return DenoiserOutput(eps_hat=LatentGrid(kernels.conv3x3_circular(x, w_o, b_o)))


# ---------------------------------------------------------------------------
# backend selection


@dataclass(frozen=True, eq=False)
class DenoiserSpec:
    """Which backend a run uses; both passes of one run share the spec."""

    kind: str
    gaussian: GaussianFieldModel = None
    toy: ToyAttentionNet = None

    def __post_init__(self):
        if self.kind not in DENOISER_KINDS:
            raise ParameterError(f"kind must be one of {DENOISER_KINDS}, got {self.kind!r}")
        if self.kind == "analytic_gaussian" and self.gaussian is None:
            raise ParameterError("analytic_gaussian spec requires a GaussianFieldModel")
        if self.kind == "toy_attention_net" and self.toy is None:
            raise ParameterError("toy_attention_net spec requires a ToyAttentionNet")

    @property
    def spectral_capable(self):
        """True when eps can be evaluated directly on spectra (no extra FFTs)."""
        return self.kind == "analytic_gaussian"
