"""Noise schedule, forward diffusion, and the two reverse samplers.

A NoiseSchedule owns the beta sequence and its cumulative products; forward
diffusion comes in the stepwise form and the closed-form marginal, and the
reverse side offers deterministic (ddim_step) and stochastic (ancestral_step)
updates. All functions are pure; noise is always passed in explicitly.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, SingularityError, SizeError
from .grid import LatentGrid

DEFAULT_T = 1000
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """Beta sequence with precomputed cumulative products.

    ``betas[i]`` is the rate at step t = i + 1; ``alphas_bar`` has T + 1
    entries with ``alphas_bar[0] = 1`` so it can be indexed directly by t.
    """

    T: int
    beta_start: float
    beta_end: float
    betas: np.ndarray = field(repr=False)
    alphas_bar: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr_name in ("betas", "alphas_bar"):
            arr = np.array(getattr(self, arr_name), dtype=np.float64, copy=True)
            arr.flags.writeable = False
            object.__setattr__(self, arr_name, arr)

    def beta(self, t: int) -> float:
        """Beta at step t, 1-indexed."""
        self.check_step(t, low=1)
        return float(self.betas[t - 1])

    def alpha_bar(self, t: int) -> float:
        """Cumulative product of (1 - beta) through step t; t=0 gives 1."""
        self.check_step(t, low=0)
        return float(self.alphas_bar[t])

    def check_step(self, t: int, low: int) -> None:
        if not (low <= t <= self.T):
            raise ParameterError(f"step {t} outside [{low}, {self.T}]")

    def header_lines(self, stride: int):
        """Text header fields embedded in run manifests."""
        return [
            f"schedule.T={self.T}",
            f"schedule.beta_start={self.beta_start!r}",
            f"schedule.beta_end={self.beta_end!r}",
            f"schedule.stride={stride}",
        ]


def make_linear_schedule(
    T: int = DEFAULT_T,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """Build a schedule with betas linearly spaced over [beta_start, beta_end].

    Both endpoints are included; for T=1 the single beta is beta_start.

    Raises:
        ParameterError: unless 0 < beta_start <= beta_end < 1 and T >= 1.
    """
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ParameterError(
            f"need 0 < beta_start <= beta_end < 1, got [{beta_start}, {beta_end}]"
        )
    if T == 1:
        betas = np.array([beta_start], dtype=np.float64)
    else:
        betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    alphas_bar = np.concatenate(([1.0], np.cumprod(1.0 - betas)))
    return NoiseSchedule(
        T=T, beta_start=float(beta_start), beta_end=float(beta_end),
        betas=betas, alphas_bar=alphas_bar,
    )


def step_grid(T: int, steps: int):
    """Descending inference steps [T - stride + 1, ..., stride + 1, 1].

    The grid is the evenly strided subsequence of [1, T] that ends at t = 1,
    so the final update happens at the lowest noise level the schedule has;
    stride = T // steps. steps = T gives the full chain [T, ..., 1].

    Raises:
        ParameterError: if steps is not in [1, T] or does not divide T evenly.
    """
    if not (1 <= steps <= T):
        raise ParameterError(f"steps must be in [1, {T}], got {steps}")
    if T % steps != 0:
        raise ParameterError(f"steps {steps} must divide T={T} for an even stride")
    stride = T // steps
    return [1 + i * stride for i in range(steps - 1, -1, -1)], stride


def _match(z: LatentGrid, other: LatentGrid, name: str) -> None:
    if z.data.shape != other.data.shape:
        raise SizeError(f"{name} shape {other.data.shape} != latent {z.data.shape}")


def diffuse_step(z_prev: LatentGrid, t: int, sched: NoiseSchedule, noise: LatentGrid) -> LatentGrid:
    """One forward-diffusion step: sqrt(1 - beta_t) z + sqrt(beta_t) noise."""
    beta = sched.beta(t)
    _match(z_prev, noise, "noise")
    return LatentGrid(np.sqrt(1.0 - beta) * z_prev.data + np.sqrt(beta) * noise.data)


def diffuse_marginal(z0: LatentGrid, t: int, sched: NoiseSchedule, noise: LatentGrid) -> LatentGrid:
    """Closed-form jump to step t: sqrt(abar_t) z0 + sqrt(1 - abar_t) noise.

    t = 0 returns z0 unchanged.
    """
    abar = sched.alpha_bar(t)
    if t == 0:
        return z0
    _match(z0, noise, "noise")
    return LatentGrid(np.sqrt(abar) * z0.data + np.sqrt(1.0 - abar) * noise.data)


def predict_z0(z_t: LatentGrid, eps_hat: LatentGrid, t: int, sched: NoiseSchedule) -> LatentGrid:
    """Invert the marginal: z0_hat = (z_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t).

    Raises:
        SingularityError: if abar_t is zero (inversion undefined).
    """
    abar = sched.alpha_bar(t)
    if abar == 0.0:
        raise SingularityError(f"alpha_bar[{t}] = 0, cannot invert marginal")
    _match(z_t, eps_hat, "eps_hat")
    return LatentGrid((z_t.data - np.sqrt(1.0 - abar) * eps_hat.data) / np.sqrt(abar))


def ddim_coeffs(t: int, t_prev: int, sched: NoiseSchedule):
    """Coefficients (a, b) of the deterministic update z_prev = a z_t + b eps_hat.

    Derived by predicting z0_hat and re-noising it to t_prev with the same
    eps_hat; exposing the affine form lets callers fuse the update with other
    linear operations.
    """
    if not (t > t_prev >= 0):
        raise ParameterError(f"need t > t_prev >= 0, got t={t}, t_prev={t_prev}")
    abar_t = sched.alpha_bar(t)
    if abar_t == 0.0:
        raise SingularityError(f"alpha_bar[{t}] = 0, ddim step undefined")
    abar_p = sched.alpha_bar(t_prev)
    ratio = np.sqrt(abar_p / abar_t)
    a = ratio
    b = np.sqrt(1.0 - abar_p) - ratio * np.sqrt(1.0 - abar_t)
    return float(a), float(b)


def ddim_step(z_t: LatentGrid, eps_hat: LatentGrid, t: int, t_prev: int, sched: NoiseSchedule) -> LatentGrid:
    """Deterministic reverse step from t to t_prev.

    Predicts z0_hat from eps_hat, then re-noises it to t_prev reusing the
    same eps_hat; t_prev = 0 returns z0_hat itself.

    Raises:
        ParameterError: unless t > t_prev >= 0.
        SingularityError: if abar_t is zero.
    """
    _match(z_t, eps_hat, "eps_hat")
    a, b = ddim_coeffs(t, t_prev, sched)
    return LatentGrid(a * z_t.data + b * eps_hat.data)


def ancestral_step(z_t: LatentGrid, eps_hat: LatentGrid, t: int, sched: NoiseSchedule, noise: LatentGrid) -> LatentGrid:
    """Stochastic reverse step from t to t - 1 with fixed variance beta_t.

    Posterior mean (z_t - beta_t / sqrt(1 - abar_t) eps_hat) / sqrt(1 - beta_t),
    plus sqrt(beta_t) noise except at t = 1, where no noise is injected.

    Raises:
        ParameterError: if t is outside [1, T].
        SingularityError: if abar_t is zero.
    """
    beta = sched.beta(t)
    abar_t = sched.alpha_bar(t)
    if abar_t == 0.0:
        raise SingularityError(f"alpha_bar[{t}] = 0, ancestral step undefined")
    _match(z_t, eps_hat, "eps_hat")
    mean = (z_t.data - beta / np.sqrt(1.0 - abar_t) * eps_hat.data) / np.sqrt(1.0 - beta)
    if t == 1:
        return LatentGrid(mean)
    _match(z_t, noise, "noise")
    return LatentGrid(mean + np.sqrt(beta) * noise.data)
