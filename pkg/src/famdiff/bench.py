"""Latency measurement: per-step pipeline timings across configurations,
plus microbenchmarks for the mixing paths and the kernel backends.

Medians over inter-quartile ranges are reported instead of means so one
scheduler hiccup cannot skew a row; warmup repeats absorb FFT plan setup and
JIT compilation before anything is recorded.
"""

import os
import statistics
import time
from dataclasses import dataclass

from . import kernels
from .errors import BenchError, ParameterError
from .freqmod import FilterParams, fm_mix, fm_mix_conv, make_filter
from .grid import LatentGrid
from .pipeline import make_config, run
from .rng import STREAM_DATA, NoiseSource

SCHEMA = "famdiff-bench-v1"
KERNEL_SCHEMA = "famdiff-kernel-bench-v1"
BENCH_HEADER = "size,scale,mode,steps,median_ns,iqr_ns,calls"
KERNEL_HEADER = "kernel,size,backend,median_ns,iqr_ns"


def require_fine_timer() -> None:
    """Refuse to benchmark on timers coarser than 1 microsecond."""
    res = time.get_clock_info("perf_counter").resolution
    if res > 1e-6:
        raise BenchError(f"perf_counter resolution {res:.2e}s is coarser than 1us")


def thread_cap(requested: int) -> int:
    """Worker count after applying the FAMDIFF_THREADS environment cap."""
    env = os.environ.get("FAMDIFF_THREADS", "").strip()
    cap = int(env) if env else requested
    return max(1, min(requested, cap))


@dataclass(frozen=True)
class BenchPlan:
    """What to measure: sizes x modes, with repeat/warmup counts."""

    sizes: tuple  # of (native_h, native_w, scale_h, scale_w)
    modes: tuple  # of (guidance variant, attn mode)
    steps: int = 50
    repeats: int = 3
    warmup: int = 1
    channels: int = 4
    backend: str = "analytic"
    seed: int = 0
    parallel: int = 1

    def __post_init__(self):
        if self.repeats < 3:
            raise ParameterError(f"repeats must be >= 3, got {self.repeats}")
        if self.warmup < 1:
            raise ParameterError(f"warmup must be >= 1, got {self.warmup}")
        if not self.sizes or not self.modes:
            raise ParameterError("plan needs at least one size and one mode")
        object.__setattr__(self, "sizes", tuple(tuple(s) for s in self.sizes))
        object.__setattr__(self, "modes", tuple(tuple(m) for m in self.modes))


@dataclass
class BenchRow:
    size: str
    scale: str
    mode: str
    steps: int
    median_ns: int
    iqr_ns: int
    calls: int

    def as_csv(self) -> str:
        return (
            f"{self.size},{self.scale},{self.mode},{self.steps},"
            f"{self.median_ns},{self.iqr_ns},{self.calls}"
        )


def _median_iqr(samples):
    med = statistics.median(samples)
    q1, _, q3 = statistics.quantiles(samples, n=4, method="inclusive")
    return int(med), int(q3 - q1)


def _mode_label(guidance: str, attn_mode: str) -> str:
    short = {"none": "none", "frequency_modulation": "fm", "skip_residual": "skip"}[guidance]
    return short if attn_mode == "off" else f"{short}+am-{attn_mode}"


def bench_config(plan: BenchPlan, size, mode) -> BenchRow:
    """Run one (size, mode) cell and summarize its per-step wall times."""
    native_h, native_w, scale_h, scale_w = size
    guidance, attn_mode = mode
    cfg = make_config(
        native_h=native_h, native_w=native_w, scale_h=scale_h, scale_w=scale_w,
        steps=plan.steps, channels=plan.channels, guidance=guidance,
        attn_mode=attn_mode, seed=plan.seed, backend=plan.backend,
    )
    samples = []
    calls = None
    for rep in range(plan.warmup + plan.repeats):
        artifacts = run(cfg)
        if artifacts.denoiser_calls != plan.steps:
            raise BenchError(
                f"denoiser calls {artifacts.denoiser_calls} != steps {plan.steps}"
            )
        calls = artifacts.denoiser_calls
        if rep >= plan.warmup:
            samples.extend(m.wall_ns for m in artifacts.metrics)
    median_ns, iqr_ns = _median_iqr(samples)
    return BenchRow(
        size=f"{native_h}x{native_w}",
        scale=f"{scale_h}x{scale_w}",
        mode=_mode_label(guidance, attn_mode),
        steps=plan.steps,
        median_ns=median_ns,
        iqr_ns=iqr_ns,
        calls=calls,
    )


def run_plan(plan: BenchPlan):
    """All cells of the plan, sequentially or across capped worker threads."""
    require_fine_timer()
    cells = [(size, mode) for size in plan.sizes for mode in plan.modes]
    workers = thread_cap(plan.parallel)
    if workers <= 1:
        return [bench_config(plan, size, mode) for size, mode in cells]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(bench_config, plan, size, mode) for size, mode in cells]
        return [f.result() for f in futures]


def bench_csv(rows, parallel: int = 1) -> str:
    lines = [f"# {SCHEMA}"]
    if parallel > 1:
        lines.append(f"# parallel={parallel} (rows timed concurrently; expect interference)")
    lines.append(BENCH_HEADER)
    lines.extend(row.as_csv() for row in rows)
    return "\n".join(lines) + "\n"


def append_bench_csv(path, rows, parallel: int = 1) -> None:
    """Write or append rows, refusing to mix schemas in one file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline().strip()
    except FileNotFoundError:
        first = None
    if first is None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(bench_csv(rows, parallel))
        return
    if first != f"# {SCHEMA}":
        raise BenchError(f"{path} carries schema {first!r}, expected '# {SCHEMA}'")
    with open(path, "a", encoding="utf-8") as fh:
        for row in rows:
            fh.write(row.as_csv() + "\n")


# ---------------------------------------------------------------------------
# microbenchmarks


def _time_calls(fn, repeats):
    samples = []
    fn()  # warmup
    for _ in range(repeats):
        started = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - started)
    return _median_iqr(samples)


def bench_mix_paths(size=(4, 64, 64), t_frac=0.5, T=1000, repeats=9):
    """Median latency of the spectral vs convolutional mixing forms."""
    require_fine_timer()
    c, h, w = size
    noise = NoiseSource(7)
    z_den = LatentGrid(noise.normal(STREAM_DATA, 0, (c, h, w)))
    z_dif = LatentGrid(noise.normal(STREAM_DATA, 1, (c, h, w)))
    filt = make_filter(FilterParams(T=T, height=h, width=w), int(T * t_frac))
    rows = []
    for name, fn in (
        ("fm_mix", lambda: fm_mix(z_den, z_dif, filt)),
        ("fm_mix_conv", lambda: fm_mix_conv(z_den, z_dif, filt)),
    ):
        med, iqr = _time_calls(fn, repeats)
        rows.append((name, f"{c}x{h}x{w}", "core", med, iqr))
    return rows


def bench_kernel_backends(repeats=9):
    """Median latency of each hot kernel under both backends."""
    require_fine_timer()
    noise = NoiseSource(11)
    small = noise.normal(STREAM_DATA, 2, (4, 32, 32))
    weights = noise.normal(STREAM_DATA, 3, (8, 4, 3, 3)) * 0.1
    bias = noise.normal(STREAM_DATA, 4, (8,)) * 0.1
    cases = (
        ("nearest_upsample", lambda b: lambda: b.nearest_upsample(small, 64, 64, False)),
        ("bilinear_upsample", lambda b: lambda: b.bilinear_upsample(small, 64, 64, False)),
        ("conv3x3_circular", lambda b: lambda: b.conv3x3_circular(small, weights, bias)),
    )
    rows = []
    previous = kernels.active_backend()
    try:
        for backend in ("numpy", "numba"):
            try:
                kernels.set_backend(backend)
            except ImportError:
                continue
            for name, make_fn in cases:
                med, iqr = _time_calls(make_fn(kernels), repeats)
                rows.append((name, "4x32x32", backend, med, iqr))
    finally:
        kernels.set_backend(previous)
    return rows


def kernel_csv(rows) -> str:
    lines = [f"# {KERNEL_SCHEMA}", KERNEL_HEADER]
    for name, size, backend, med, iqr in rows:
        lines.append(f"{name},{size},{backend},{med},{iqr}")
    return "\n".join(lines) + "\n"
