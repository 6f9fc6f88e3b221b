"""Single-pass high-resolution sampling: generate at native resolution,
upsample, forward-diffuse the upsampled latent, and denoise at the target
resolution with per-step frequency guidance and optional attention replay.

The high-resolution chain calls the denoiser exactly ``steps`` times; no
tile or patch is ever re-denoised. With the analytic backend and frequency
guidance the whole step collapses into one frequency-domain pass (the mixing
mask, the noise posterior, and the sampler update are all per-bin linear
maps), so guidance adds elementwise work but no extra transforms.
"""

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._version import VERSION
from .attention import AttnModConfig, TapSession, TapStore
from .denoiser import (
    DenoiserOutput,
    DenoiserSpec,
    ToyAttentionNet,
    analytic_eps,
    analytic_eps_spectral,
    rescale_gaussian,
    sample_field,
    toy_net_eps,
)
from .errors import CapacityError, ParameterError, SizeError
from .freqmod import FilterParams, GuidanceMode, make_filter, fm_mix, skip_residual_mix, unshifted_mask
from .grid import LatentGrid, ResampleSpec, SpectralGrid, idft2, upsample
from .rng import (
    STREAM_DIFFUSE,
    STREAM_HIGH,
    STREAM_INIT,
    STREAM_NATIVE,
    NoiseSource,
)
from .schedule import (
    NoiseSchedule,
    ancestral_step,
    ddim_coeffs,
    ddim_step,
    diffuse_marginal,
    make_linear_schedule,
    predict_z0,
    step_grid,
)

SAMPLERS = ("ddim", "ancestral")
FM_APPLY = ("pre", "post")
STORAGE_MODES = ("materialize", "recompute")
INIT_MODES = ("standard_normal", "forward_marginal")

# materialized diffused sequences above this many bytes must use recompute
DIFFUSED_MEMORY_CAP = 1 << 30


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Everything one run depends on; validated as a whole at construction."""

    native_h: int
    native_w: int
    scale_h: int
    scale_w: int
    steps: int
    channels: int
    guidance: GuidanceMode
    attn: AttnModConfig
    filter: FilterParams
    seed: int
    denoiser: DenoiserSpec
    sched: NoiseSchedule
    sampler: str = "ddim"
    fm_apply: str = "pre"
    storage: str = "materialize"
    init: str = "standard_normal"

    def __post_init__(self):
        if self.native_h < 1 or self.native_w < 1:
            raise SizeError(f"native dims must be >= 1, got {self.native_h}x{self.native_w}")
        if self.scale_h < 1 or self.scale_w < 1:
            raise ParameterError(f"scales must be >= 1, got {self.scale_h}x{self.scale_w}")
        if self.channels < 1:
            raise SizeError(f"channels must be >= 1, got {self.channels}")
        if self.sampler not in SAMPLERS:
            raise ParameterError(f"sampler must be one of {SAMPLERS}, got {self.sampler!r}")
        if self.fm_apply not in FM_APPLY:
            raise ParameterError(f"fm_apply must be one of {FM_APPLY}, got {self.fm_apply!r}")
        if self.storage not in STORAGE_MODES:
            raise ParameterError(f"storage must be one of {STORAGE_MODES}, got {self.storage!r}")
        if self.init not in INIT_MODES:
            raise ParameterError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        step_grid(self.sched.T, self.steps)
        if self.sampler == "ancestral" and self.steps != self.sched.T:
            raise ParameterError("ancestral sampler requires steps == T (stride 1)")
        if (self.filter.height, self.filter.width) != (self.high_h, self.high_w):
            raise SizeError(
                f"filter dims {self.filter.height}x{self.filter.width} must equal "
                f"scaled dims {self.high_h}x{self.high_w}"
            )
        if self.filter.T != self.sched.T:
            raise ParameterError("filter T must match the schedule's T")
        if self.init == "forward_marginal" and self.denoiser.kind != "analytic_gaussian":
            raise ParameterError("forward_marginal init requires the analytic backend")
        if self.denoiser.kind == "analytic_gaussian":
            model = self.denoiser.gaussian
            if (model.height, model.width) != (self.native_h, self.native_w):
                raise SizeError("gaussian model dims must equal native dims")
        else:
            net = self.denoiser.toy
            if (net.height, net.width) != (self.native_h, self.native_w):
                raise SizeError("toy net dims must equal native dims")
            if net.channels != self.channels:
                raise SizeError("toy net channels must equal run channels")
            # the scaled net is built later; reject impossible dims up front
            ToyAttentionNet(
                seed=net.seed, channels=net.channels,
                height=self.high_h, width=self.high_w, weights=net.weights,
            )
        if self.attn.active:
            if self.denoiser.kind != "toy_attention_net":
                raise ParameterError("attention modulation requires the toy net backend")
            if self.scale_h != self.scale_w:
                raise ParameterError("attention modulation requires equal per-axis scales")

    @property
    def high_h(self):
        return self.native_h * self.scale_h

    @property
    def high_w(self):
        return self.native_w * self.scale_w

    @property
    def resample(self):
        return ResampleSpec(
            scale_h=Fraction(self.scale_h), scale_w=Fraction(self.scale_w),
            mode="bilinear", alignment="half-pixel",
        )


def make_config(
    native_h=32,
    native_w=32,
    scale_h=2,
    scale_w=None,
    steps=50,
    channels=4,
    guidance="frequency_modulation",
    skip_alpha=1.0,
    attn_mode="off",
    lam=0.7,
    cutoff_c=0.5,
    seed=0,
    backend="analytic",
    sampler="ddim",
    fm_apply="pre",
    storage="materialize",
    init="standard_normal",
    mean=0.0,
    profile="smooth",
    profile_param=None,
    toy_seed=42,
    T=None,
    beta_start=None,
    beta_end=None,
) -> RunConfig:
    """Assemble a consistent RunConfig from plain scalars (the CLI surface)."""
    from .denoiser import GaussianFieldModel

    if scale_w is None:
        scale_w = scale_h
    sched = make_linear_schedule(
        T=1000 if T is None else T,
        beta_start=1e-4 if beta_start is None else beta_start,
        beta_end=0.02 if beta_end is None else beta_end,
    )
    filt = FilterParams(
        T=sched.T, height=native_h * scale_h, width=native_w * scale_w, cutoff_c=cutoff_c
    )
    if backend == "analytic":
        if profile == "smooth":
            strength = 4.0 if profile_param is None else profile_param
            model = GaussianFieldModel.smooth(mean, native_h, native_w, strength=strength)
        elif profile == "white":
            scale = 1.0 if profile_param is None else profile_param
            model = GaussianFieldModel.white(mean, native_h, native_w, scale=scale)
        else:
            raise ParameterError(f"profile must be smooth or white, got {profile!r}")
        spec = DenoiserSpec(kind="analytic_gaussian", gaussian=model)
    elif backend == "toy":
        spec = DenoiserSpec(
            kind="toy_attention_net",
            toy=ToyAttentionNet(seed=toy_seed, channels=channels, height=native_h, width=native_w),
        )
    else:
        raise ParameterError(f"backend must be analytic or toy, got {backend!r}")
    return RunConfig(
        native_h=native_h, native_w=native_w, scale_h=scale_h, scale_w=scale_w,
        steps=steps, channels=channels,
        guidance=GuidanceMode(variant=guidance, skip_alpha=skip_alpha),
        attn=AttnModConfig(mode=attn_mode, lam=lam),
        filter=filt, seed=seed, denoiser=spec, sched=sched,
        sampler=sampler, fm_apply=fm_apply, storage=storage, init=init,
    )


@dataclass
class StepMetric:
    """One metrics-CSV row for one high-resolution step."""

    step: int
    t: int
    lf_error: float
    wall_ns: int
    denoiser_calls: int


@dataclass(eq=False)
class RunArtifacts:
    """Everything a run produces, in memory; cmd_run serializes it."""

    z_native: LatentGrid
    z_high: LatentGrid
    metrics: list
    tap_log: list
    manifest: str
    denoiser_calls: int


class DiffusedSequence:
    """The forward-diffused upsampled latent at every scheduled step.

    ``materialize`` keeps every grid (and, when asked, its spectrum) in
    memory; ``recompute`` re-derives any entry on demand from the clean
    upsampled latent and the shared per-step noise stream, trading time for
    memory with identical values.
    """

    def __init__(self, z0_up, ts, sched, noise, storage, keep_spectra=False):
        self.z0_up = z0_up
        self.ts = list(ts)
        self._sched = sched
        self._noise = noise
        self.storage = storage
        self._grids = {}
        self._spectra = {}
        if storage == "materialize":
            bytes_needed = len(self.ts) * z0_up.data.nbytes * (3 if keep_spectra else 1)
            if bytes_needed > DIFFUSED_MEMORY_CAP:
                raise CapacityError(
                    f"materializing {len(self.ts)} diffused latents needs "
                    f"{bytes_needed} bytes (cap {DIFFUSED_MEMORY_CAP}); "
                    "use storage='recompute'"
                )
            for t in self.ts:
                grid = self._derive(t)
                self._grids[t] = grid
                if keep_spectra:
                    self._spectra[t] = np.fft.fft2(grid.data, axes=(-2, -1))

    def _derive(self, t):
        if t == 0:
            return self.z0_up
        noise = self._noise.normal_grid(STREAM_DIFFUSE, t, self.z0_up.data.shape)
        return diffuse_marginal(self.z0_up, t, self._sched, noise)

    def get(self, t) -> LatentGrid:
        if t in self._grids:
            return self._grids[t]
        return self._derive(t)

    def spectrum(self, t) -> np.ndarray:
        if t in self._spectra:
            return self._spectra[t]
        return np.fft.fft2(self.get(t).data, axes=(-2, -1))


def _native_denoiser(cfg: RunConfig):
    if cfg.denoiser.kind == "analytic_gaussian":
        model = cfg.denoiser.gaussian
        return lambda z, t, taps=None: analytic_eps(z, t, cfg.sched, model)
    net = cfg.denoiser.toy
    return lambda z, t, taps=None: toy_net_eps(z, t, net, taps)


def _high_denoiser(cfg: RunConfig):
    if cfg.denoiser.kind == "analytic_gaussian":
        model = rescale_gaussian(cfg.denoiser.gaussian, cfg.high_h, cfg.high_w)
        return (lambda z, t, taps=None: analytic_eps(z, t, cfg.sched, model)), model
    net = ToyAttentionNet(
        seed=cfg.denoiser.toy.seed, channels=cfg.channels,
        height=cfg.high_h, width=cfg.high_w, weights=cfg.denoiser.toy.weights,
    )
    return (lambda z, t, taps=None: toy_net_eps(z, t, net, taps)), net


def generate_native(cfg: RunConfig, tap_store: TapStore = None, tap_log: list = None) -> LatentGrid:
    """Full reverse chain at native dims from seeded noise.

    When attention modulation is on and a tap store is supplied, the chain
    records its target-block matrices into the store for later replay.
    """
    sched = cfg.sched
    ts, _ = step_grid(sched.T, cfg.steps)
    noise = NoiseSource(cfg.seed)
    shape = (cfg.channels, cfg.native_h, cfg.native_w)
    if cfg.init == "forward_marginal":
        z0_star = sample_field(cfg.denoiser.gaussian, cfg.channels, noise.generator(STREAM_INIT, 1))
        z = diffuse_marginal(z0_star, ts[0], sched, noise.normal_grid(STREAM_INIT, 0, shape))
    else:
        z = noise.normal_grid(STREAM_INIT, 0, shape)
    session = None
    if cfg.attn.active and tap_store is not None:
        session = TapSession(cfg.attn, tap_store, TapSession.CAPTURE)
    eps_fn = _native_denoiser(cfg)
    for i, t in enumerate(ts):
        t_prev = ts[i + 1] if i + 1 < len(ts) else 0
        if session is not None:
            session.begin_step(t)
        out = eps_fn(z, t, taps=session)
        if cfg.sampler == "ddim":
            z = ddim_step(z, out.eps_hat, t, t_prev, sched)
        else:
            step_noise = noise.normal_grid(STREAM_NATIVE, t, shape)
            z = ancestral_step(z, out.eps_hat, t, sched, step_noise)
    if session is not None and tap_log is not None:
        tap_log.extend(session.log)
    return z


def diffuse_upsampled(z_native: LatentGrid, cfg: RunConfig, keep_spectra: bool = False) -> DiffusedSequence:
    """Upsample the native output and forward-diffuse it to every scheduled t."""
    if (z_native.height, z_native.width) != (cfg.native_h, cfg.native_w):
        raise SizeError(
            f"z_native is {z_native.height}x{z_native.width}, "
            f"config says {cfg.native_h}x{cfg.native_w}"
        )
    z0_up = upsample(z_native, cfg.resample)
    ts, _ = step_grid(cfg.sched.T, cfg.steps)
    noise = NoiseSource(cfg.seed)
    return DiffusedSequence(
        z0_up, ts + [0], cfg.sched, noise, cfg.storage, keep_spectra=keep_spectra
    )


def low_frequency_error(z: LatentGrid, z_ref: LatentGrid, cutoff_c: float) -> float:
    """Relative L2 distance between spectra inside the t=0 guidance rectangle.

    The rectangle is the filter's: half-extents (h c / 2, w c / 2) about the
    DC-centered bin, strict inequalities.
    """
    Z = np.fft.fft2(z.data, axes=(-2, -1))
    Z_ref = np.fft.fft2(z_ref.data, axes=(-2, -1))
    sel = _rect_selector(z.height, z.width, cutoff_c)
    return _spectral_rect_error(Z, Z_ref, sel)


def _rect_selector(h: int, w: int, cutoff_c: float) -> np.ndarray:
    params = FilterParams(T=1, height=h, width=w, cutoff_c=cutoff_c)
    inside_shifted = make_filter(params, 0).mask == 0.0
    return np.fft.ifftshift(inside_shifted)


def _spectral_rect_error(Z: np.ndarray, Z_ref: np.ndarray, sel: np.ndarray) -> float:
    diff = np.linalg.norm((Z - Z_ref)[:, sel])
    ref = np.linalg.norm(Z_ref[:, sel])
    if ref == 0.0:
        return 0.0 if diff == 0.0 else float("inf")
    return float(diff / ref)


def _fused_eligible(cfg: RunConfig) -> bool:
    return (
        cfg.guidance.variant == "frequency_modulation"
        and cfg.fm_apply == "pre"
        and cfg.sampler == "ddim"
        and cfg.denoiser.spectral_capable
        and not cfg.attn.active
    )


def denoise_guided(
    z_seq: DiffusedSequence,
    cfg: RunConfig,
    tap_store: TapStore = None,
    metrics_out: list = None,
    tap_log_out: list = None,
    calls_out: list = None,
    attn_keep: dict = None,
) -> LatentGrid:
    """Guided reverse chain at the target resolution; returns the final latent.

    Starts from the diffused sequence's entry at the top scheduled step. At
    each scheduled step the state is mixed with the matching diffused latent
    per the guidance mode (before the denoiser call by default), the denoiser
    runs once, and the sampler advances. Optional sinks collect per-step
    metrics, the tap log, and the denoiser-call count.
    """
    sched = cfg.sched
    ts, _ = step_grid(sched.T, cfg.steps)
    if _fused_eligible(cfg):
        return _denoise_guided_fused(z_seq, cfg, ts, metrics_out, calls_out)

    noise = NoiseSource(cfg.seed)
    shape = (cfg.channels, cfg.high_h, cfg.high_w)
    eps_fn, _ = _high_denoiser(cfg)
    fm_on = cfg.guidance.variant == "frequency_modulation"
    skip_on = cfg.guidance.variant == "skip_residual"
    filters = {}
    if fm_on:
        grid = ts if cfg.fm_apply == "pre" else [ts[i + 1] if i + 1 < len(ts) else 0 for i in range(len(ts))]
        filters = {t: make_filter(cfg.filter, t) for t in grid}
    session = None
    if cfg.attn.active:
        if tap_store is None:
            raise ParameterError("attention modulation needs the native tap store")
        session = TapSession(
            cfg.attn, tap_store, TapSession.REPLAY, scale=cfg.scale_h, keep=attn_keep
        )
    sel = _rect_selector(cfg.high_h, cfg.high_w, cfg.filter.cutoff_c)
    Z_ref = z_seq.spectrum(0)
    z = z_seq.get(ts[0])
    calls = 0
    for i, t in enumerate(ts):
        t_prev = ts[i + 1] if i + 1 < len(ts) else 0
        started = time.perf_counter_ns()
        if cfg.fm_apply == "pre":
            if fm_on:
                z = fm_mix(z, z_seq.get(t), filters[t])
            elif skip_on:
                z = skip_residual_mix(z, z_seq.get(t), t, sched.T, cfg.guidance.skip_alpha)
        if session is not None:
            session.begin_step(t)
        out = eps_fn(z, t, taps=session)
        calls += 1
        if cfg.sampler == "ddim":
            z_next = ddim_step(z, out.eps_hat, t, t_prev, sched)
        else:
            step_noise = noise.normal_grid(STREAM_HIGH, t, shape)
            z_next = ancestral_step(z, out.eps_hat, t, sched, step_noise)
        if cfg.fm_apply == "post":
            if fm_on:
                z_next = fm_mix(z_next, z_seq.get(t_prev), filters[t_prev])
            elif skip_on:
                z_next = skip_residual_mix(z_next, z_seq.get(t_prev), t_prev, sched.T, cfg.guidance.skip_alpha)
        wall_ns = time.perf_counter_ns() - started
        if metrics_out is not None:
            z0_pred = predict_z0(z, out.eps_hat, t, sched)
            Z0 = np.fft.fft2(z0_pred.data, axes=(-2, -1))
            lf = _spectral_rect_error(Z0, Z_ref, sel)
            metrics_out.append(StepMetric(i, t, lf, wall_ns, calls))
        z = z_next
    if session is not None and tap_log_out is not None:
        tap_log_out.extend(session.log)
    if calls_out is not None:
        calls_out.append(calls)
    return z


def _denoise_guided_fused(z_seq, cfg, ts, metrics_out, calls_out):
    """Frequency-domain form of the guided chain for the analytic backend.

    Per step: one forward transform of the state, elementwise mixing against
    the cached diffused spectrum, the closed-form noise posterior on the
    mixed spectrum, the affine sampler update, one inverse transform. The
    mixing and posterior are per-bin multiplies, so guidance costs no
    additional transforms over the unguided chain.
    """
    sched = cfg.sched
    model = rescale_gaussian(cfg.denoiser.gaussian, cfg.high_h, cfg.high_w)
    masks = {t: unshifted_mask(make_filter(cfg.filter, t)) for t in ts}
    sel = _rect_selector(cfg.high_h, cfg.high_w, cfg.filter.cutoff_c)
    Z_ref = z_seq.spectrum(0)
    z = z_seq.get(ts[0])
    calls = 0
    for i, t in enumerate(ts):
        t_prev = ts[i + 1] if i + 1 < len(ts) else 0
        diffused_spec = z_seq.spectrum(t)
        started = time.perf_counter_ns()
        ku = masks[t]
        Z = np.fft.fft2(z.data, axes=(-2, -1))
        Z_mixed = ku * Z + (1.0 - ku) * diffused_spec
        E = analytic_eps_spectral(Z_mixed, t, sched, model)
        calls += 1
        a, b = ddim_coeffs(t, t_prev, sched)
        z_next = idft2(SpectralGrid(a * Z_mixed + b * E))
        wall_ns = time.perf_counter_ns() - started
        if metrics_out is not None:
            abar = sched.alpha_bar(t)
            Z0 = (Z_mixed - np.sqrt(1.0 - abar) * E) / np.sqrt(abar)
            lf = _spectral_rect_error(Z0, Z_ref, sel)
            metrics_out.append(StepMetric(i, t, lf, wall_ns, calls))
        z = z_next
    if calls_out is not None:
        calls_out.append(calls)
    return z


def build_manifest(cfg: RunConfig) -> str:
    """Deterministic key=value echo of the full configuration."""
    _, stride = step_grid(cfg.sched.T, cfg.steps)
    lines = [
        "format=famdiff-run-manifest-v1",
        f"version={VERSION}",
        f"native_h={cfg.native_h}",
        f"native_w={cfg.native_w}",
        f"scale_h={cfg.scale_h}",
        f"scale_w={cfg.scale_w}",
        f"steps={cfg.steps}",
        f"channels={cfg.channels}",
        f"guidance={cfg.guidance.variant}",
        f"skip_alpha={cfg.guidance.skip_alpha!r}",
        f"fm_apply={cfg.fm_apply}",
        f"cutoff_c={cfg.filter.cutoff_c!r}",
        f"attn_mode={cfg.attn.mode}",
        f"attn_lambda={cfg.attn.effective_lambda!r}",
        f"attn_blocks={','.join(sorted(cfg.attn.target_blocks))}",
        f"sampler={cfg.sampler}",
        f"storage={cfg.storage}",
        f"init={cfg.init}",
        f"seed={cfg.seed}",
        f"native_seed_stream={STREAM_NATIVE}",
        f"high_seed_stream={STREAM_HIGH}",
        f"backend={cfg.denoiser.kind}",
    ]
    if cfg.denoiser.kind == "analytic_gaussian":
        model = cfg.denoiser.gaussian
        if model.profile is None:
            lines.append("gaussian_profile=custom")
        else:
            lines.append(f"gaussian_profile={model.profile[0]}")
            lines.append(f"gaussian_param={model.profile[1]!r}")
        lines.append(f"gaussian_mean={model.mean!r}")
    else:
        lines.append(f"toy_seed={cfg.denoiser.toy.seed}")
        lines.append(f"backend_detail={cfg.denoiser.toy.describe()}")
    lines.extend(cfg.sched.header_lines(stride))
    return "\n".join(lines) + "\n"


def config_from_manifest(text: str) -> RunConfig:
    """Rebuild the RunConfig a manifest recorded (used by inspection)."""
    fields = {}
    for line in text.splitlines():
        if "=" in line:
            key, _, value = line.partition("=")
            fields[key] = value
    if fields.get("format") != "famdiff-run-manifest-v1":
        raise ParameterError(f"unrecognized manifest format {fields.get('format')!r}")
    backend = fields["backend"]
    if backend == "analytic_gaussian" and fields.get("gaussian_profile") == "custom":
        raise ParameterError("cannot rebuild a custom-spectrum model from a manifest")
    blocks = [b for b in fields["attn_blocks"].split(",") if b]
    cfg = make_config(
        native_h=int(fields["native_h"]),
        native_w=int(fields["native_w"]),
        scale_h=int(fields["scale_h"]),
        scale_w=int(fields["scale_w"]),
        steps=int(fields["steps"]),
        channels=int(fields["channels"]),
        guidance=fields["guidance"],
        skip_alpha=float(fields["skip_alpha"]),
        attn_mode=fields["attn_mode"],
        lam=float(fields["attn_lambda"]),
        cutoff_c=float(fields["cutoff_c"]),
        seed=int(fields["seed"]),
        backend="analytic" if backend == "analytic_gaussian" else "toy",
        sampler=fields["sampler"],
        fm_apply=fields["fm_apply"],
        storage=fields["storage"],
        init=fields["init"],
        mean=float(fields.get("gaussian_mean", 0.0)),
        profile=fields.get("gaussian_profile", "smooth"),
        profile_param=float(fields["gaussian_param"]) if "gaussian_param" in fields else None,
        toy_seed=int(fields.get("toy_seed", 42)),
        T=int(fields["schedule.T"]),
        beta_start=float(fields["schedule.beta_start"]),
        beta_end=float(fields["schedule.beta_end"]),
    )
    if blocks and frozenset(blocks) != cfg.attn.target_blocks:
        cfg = RunConfig(
            **{**cfg.__dict__,
               "attn": AttnModConfig(
                   mode=cfg.attn.mode, lam=cfg.attn.lam, target_blocks=frozenset(blocks)
               )},
        )
    return cfg


def run(cfg: RunConfig) -> RunArtifacts:
    """Native pass, diffusion of the upsampled latent, guided high-res pass."""
    tap_store = TapStore() if cfg.attn.active else None
    tap_log = []
    z_native = generate_native(cfg, tap_store=tap_store, tap_log=tap_log)
    z_seq = diffuse_upsampled(z_native, cfg, keep_spectra=_fused_eligible(cfg))
    metrics = []
    calls_sink = []
    z_high = denoise_guided(
        z_seq, cfg,
        tap_store=tap_store, metrics_out=metrics,
        tap_log_out=tap_log, calls_out=calls_sink,
    )
    calls = calls_sink[0]
    assert calls == cfg.steps, f"denoiser ran {calls} times for {cfg.steps} steps"
    assert len(metrics) == cfg.steps
    return RunArtifacts(
        z_native=z_native, z_high=z_high, metrics=metrics,
        tap_log=tap_log, manifest=build_manifest(cfg), denoiser_calls=calls,
    )


def metrics_csv(metrics) -> str:
    """Render step metrics with the frozen column schema."""
    lines = ["step,t,lf_error,wall_ns,denoiser_calls"]
    for m in metrics:
        lines.append(f"{m.step},{m.t},{m.lf_error!r},{m.wall_ns},{m.denoiser_calls}")
    return "\n".join(lines) + "\n"
