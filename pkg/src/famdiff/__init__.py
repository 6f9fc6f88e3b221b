"""famdiff: desk-scale diffuse-denoise sampling with frequency- and
attention-modulated guidance.

The package generates a latent at a small native resolution, upsamples it,
forward-diffuses the result, and re-denoises at the target resolution in a
single pass. Low frequencies of each step are steered toward the diffused
reference through a time-varying spectral mask, and self-attention maps
captured at native resolution can be upsampled and blended into the
high-resolution pass.
"""

from ._version import VERSION as __version__
from .attention import (
    AttentionMatrix,
    AttnModConfig,
    TapSession,
    TapStore,
    modulate_attention,
    softmax_attention,
    upsample_attention,
)
from .denoiser import (
    DenoiserOutput,
    DenoiserSpec,
    GaussianFieldModel,
    ToyAttentionNet,
    analytic_eps,
    resolution_adapt,
    sample_field,
    toy_net_eps,
)
from .errors import (
    BenchError,
    CapacityError,
    FamdiffError,
    FormatError,
    NumericError,
    PairingError,
    ParameterError,
    ShapeError,
    SingularityError,
    SizeError,
    SpectralAsymmetryError,
)
from .freqmod import (
    FilterParams,
    GuidanceMode,
    HighPassFilter,
    filter_to_kernel,
    fm_mix,
    fm_mix_conv,
    make_filter,
    skip_residual_mix,
)
from .grid import (
    LatentGrid,
    ResampleSpec,
    SpectralGrid,
    circular_conv,
    dft2,
    fftshift,
    idft2,
    ifftshift,
    upsample,
)
from .latfile import latent_from_bytes, latent_to_bytes, read_latent, write_latent
from .pipeline import (
    RunArtifacts,
    RunConfig,
    denoise_guided,
    diffuse_upsampled,
    generate_native,
    low_frequency_error,
    make_config,
    run,
)
from .rng import NoiseSource
from .schedule import (
    NoiseSchedule,
    ancestral_step,
    ddim_step,
    diffuse_marginal,
    diffuse_step,
    make_linear_schedule,
    predict_z0,
    step_grid,
)

__all__ = [
    "__version__",
    "AttentionMatrix", "AttnModConfig", "TapSession", "TapStore",
    "modulate_attention", "softmax_attention", "upsample_attention",
    "DenoiserOutput", "DenoiserSpec", "GaussianFieldModel", "ToyAttentionNet",
    "analytic_eps", "resolution_adapt", "sample_field", "toy_net_eps",
    "BenchError", "CapacityError", "FamdiffError", "FormatError",
    "NumericError", "PairingError", "ParameterError", "ShapeError",
    "SingularityError", "SizeError", "SpectralAsymmetryError",
    "FilterParams", "GuidanceMode", "HighPassFilter",
    "filter_to_kernel", "fm_mix", "fm_mix_conv", "make_filter", "skip_residual_mix",
    "LatentGrid", "ResampleSpec", "SpectralGrid",
    "circular_conv", "dft2", "fftshift", "idft2", "ifftshift", "upsample",
    "latent_from_bytes", "latent_to_bytes", "read_latent", "write_latent",
    "RunArtifacts", "RunConfig", "denoise_guided", "diffuse_upsampled",
    "generate_native", "low_frequency_error", "make_config", "run",
    "NoiseSource",
    "NoiseSchedule", "ancestral_step", "ddim_step", "diffuse_marginal",
    "diffuse_step", "make_linear_schedule", "predict_z0", "step_grid",
]
