"""Command-line front end: run the pipeline, benchmark it, inspect filters
and attention maps, and expose the stateless kernels for host-language
bindings. A pure shell over library calls; exit codes are 0 success, 2 flag
error, 3 runtime error.
"""

import argparse
import os
import sys

from . import bench as bench_mod
from . import latfile
from ._version import VERSION
from .attention import AttentionMatrix, AttnModConfig, TapStore, modulate_attention, upsample_attention
from .errors import FamdiffError, ParameterError
from .freqmod import FilterParams, fm_mix, fm_mix_conv, make_filter
from .grid import LatentGrid
from .pipeline import (
    config_from_manifest,
    denoise_guided,
    diffuse_upsampled,
    generate_native,
    make_config,
    metrics_csv,
    run,
)
from .schedule import step_grid

GUIDANCE_FLAG = {"none": "none", "fm": "frequency_modulation", "skip": "skip_residual"}


def _dims(text: str):
    h, sep, w = text.lower().partition("x")
    if not sep:
        raise ValueError(f"expected HxW, got {text!r}")
    return int(h), int(w)


def _scales(text: str):
    if "x" in text.lower():
        return _dims(text)
    s = int(text)
    return s, s


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="famdiff",
        description="Frequency- and attention-modulated diffuse-denoise sampling.",
    )
    parser.add_argument("--version", action="version", version=f"famdiff {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one pipeline run and write artifacts")
    run_p.add_argument("--native", type=_dims, default=(32, 32), metavar="HxW")
    run_p.add_argument("--scale", type=_scales, default=None, metavar="S|SHxSW")
    run_p.add_argument("--scale-h", type=int, default=None)
    run_p.add_argument("--scale-w", type=int, default=None)
    run_p.add_argument("--steps", type=int, default=50)
    run_p.add_argument("--channels", type=int, default=4)
    run_p.add_argument("--guidance", choices=sorted(GUIDANCE_FLAG), default="fm")
    run_p.add_argument("--skip-alpha", type=float, default=1.0)
    run_p.add_argument("--lambda", dest="lam", type=float, default=0.7)
    run_p.add_argument("--cutoff-c", type=float, default=0.5)
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--backend", choices=("analytic", "toy"), default="analytic")
    run_p.add_argument("--sampler", choices=("ddim", "ancestral"), default="ddim")
    run_p.add_argument("--attn", choices=("off", "modulate", "swap"), default="off")
    run_p.add_argument("--fm-apply", choices=("pre", "post"), default="pre")
    run_p.add_argument("--storage", choices=("materialize", "recompute"), default="materialize")
    run_p.add_argument("--init", choices=("standard_normal", "forward_marginal"), default="standard_normal")
    run_p.add_argument("--mean", type=float, default=0.0)
    run_p.add_argument("--profile", choices=("smooth", "white"), default="smooth")
    run_p.add_argument("--toy-seed", type=int, default=42)
    run_p.add_argument("--T", type=int, default=1000)
    run_p.add_argument("--out", required=True, metavar="DIR")

    bench_p = sub.add_parser("bench", help="per-step latency across configurations")
    bench_p.add_argument("--sizes", default="32x32:2", metavar="HxW:S[,...]")
    bench_p.add_argument("--modes", default="none,fm", metavar="MODE[,...]")
    bench_p.add_argument("--steps", type=int, default=50)
    bench_p.add_argument("--channels", type=int, default=4)
    bench_p.add_argument("--repeats", type=int, default=3)
    bench_p.add_argument("--warmup", type=int, default=1)
    bench_p.add_argument("--backend", choices=("analytic", "toy"), default="analytic")
    bench_p.add_argument("--seed", type=int, default=0)
    bench_p.add_argument("--parallel", type=int, default=1)
    bench_p.add_argument("--out", default="bench.csv", metavar="CSV")

    kern_p = sub.add_parser("bench-kernels", help="kernel backend and mixing-path latencies")
    kern_p.add_argument("--repeats", type=int, default=9)
    kern_p.add_argument("--out", default="kernels.csv", metavar="CSV")

    insp = sub.add_parser("inspect", help="render filter masks or attention maps")
    what = insp.add_mutually_exclusive_group(required=True)
    what.add_argument("--filter", action="store_true")
    what.add_argument("--attn", action="store_true")
    insp.add_argument("--t", type=int, action="append", default=None)
    insp.add_argument("--size", type=_dims, default=(64, 64), metavar="HxW")
    insp.add_argument("--T", type=int, default=1000)
    insp.add_argument("--cutoff-c", type=float, default=0.5)
    insp.add_argument("--run", dest="run_dir", default=None, metavar="DIR")
    insp.add_argument("--query", type=int, default=0)
    insp.add_argument("--block", default=None)
    insp.add_argument("--out", default=None, metavar="DIR")

    kernel = sub.add_parser("kernel", help="stateless kernels over latent files")
    ksub = kernel.add_subparsers(dest="kernel_op", required=True)

    mix = ksub.add_parser("fm-mix")
    mix_conv = ksub.add_parser("fm-mix-conv")
    for p in (mix, mix_conv):
        p.add_argument("--z-denoised", required=True)
        p.add_argument("--z-diffused", required=True)
        p.add_argument("--t", type=int, required=True)
        p.add_argument("--T", type=int, required=True)
        p.add_argument("--cutoff-c", type=float, default=0.5)
        p.add_argument("--out", required=True)

    mk = ksub.add_parser("make-filter")
    mk.add_argument("--size", type=_dims, required=True, metavar="HxW")
    mk.add_argument("--t", type=int, required=True)
    mk.add_argument("--T", type=int, required=True)
    mk.add_argument("--cutoff-c", type=float, default=0.5)
    mk.add_argument("--out", required=True)

    ua = ksub.add_parser("upsample-attn")
    ua.add_argument("--matrix", required=True)
    ua.add_argument("--spatial", type=_dims, required=True, metavar="HxW")
    ua.add_argument("--scale", type=int, required=True)
    ua.add_argument("--out", required=True)

    ma = ksub.add_parser("modulate-attn")
    ma.add_argument("--native", required=True)
    ma.add_argument("--high", required=True)
    ma.add_argument("--spatial", type=_dims, required=True, metavar="HxW")
    ma.add_argument("--scale", type=int, required=True)
    ma.add_argument("--lambda", dest="lam", type=float, required=True)
    ma.add_argument("--out", required=True)

    return parser


def cmd_run(args) -> int:
    scale_h, scale_w = args.scale if args.scale else (2, 2)
    if args.scale_h is not None:
        scale_h = args.scale_h
    if args.scale_w is not None:
        scale_w = args.scale_w
    cfg = make_config(
        native_h=args.native[0], native_w=args.native[1],
        scale_h=scale_h, scale_w=scale_w,
        steps=args.steps, channels=args.channels,
        guidance=GUIDANCE_FLAG[args.guidance], skip_alpha=args.skip_alpha,
        attn_mode=args.attn, lam=args.lam, cutoff_c=args.cutoff_c,
        seed=args.seed, backend=args.backend, sampler=args.sampler,
        fm_apply=args.fm_apply, storage=args.storage, init=args.init,
        mean=args.mean, profile=args.profile, toy_seed=args.toy_seed, T=args.T,
    )
    artifacts = run(cfg)
    os.makedirs(args.out, exist_ok=True)
    latfile.write_latent(os.path.join(args.out, "z_native.lat"), artifacts.z_native)
    latfile.write_latent(os.path.join(args.out, "z_high.lat"), artifacts.z_high)
    latfile.write_pgm(os.path.join(args.out, "render.pgm"), latfile.render_mosaic(artifacts.z_high))
    with open(os.path.join(args.out, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write(artifacts.manifest)
    with open(os.path.join(args.out, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write(metrics_csv(artifacts.metrics))
    if cfg.attn.active:
        from .attention import tap_log_csv

        with open(os.path.join(args.out, "taps.csv"), "w", encoding="utf-8") as fh:
            fh.write(tap_log_csv(artifacts.tap_log))
    return 0


def cmd_bench(args) -> int:
    sizes = []
    for token in args.sizes.split(","):
        dims, sep, scales = token.strip().partition(":")
        if not sep:
            raise ParameterError(f"size {token!r} must look like HxW:S or HxW:SHxSW")
        (nh, nw), (sh, sw) = _dims(dims), _scales(scales)
        sizes.append((nh, nw, sh, sw))
    modes = []
    for token in args.modes.split(","):
        base, sep, suffix = token.strip().partition("+")
        if base not in GUIDANCE_FLAG or (sep and suffix != "am"):
            raise ParameterError(f"mode {token!r} must be none|fm|skip with optional +am")
        modes.append((GUIDANCE_FLAG[base], "modulate" if sep else "off"))
    plan = bench_mod.BenchPlan(
        sizes=tuple(sizes), modes=tuple(modes), steps=args.steps,
        repeats=args.repeats, warmup=args.warmup, channels=args.channels,
        backend=args.backend, seed=args.seed, parallel=args.parallel,
    )
    rows = bench_mod.run_plan(plan)
    bench_mod.append_bench_csv(args.out, rows, parallel=args.parallel)
    for row in rows:
        print(row.as_csv())
    return 0


def cmd_bench_kernels(args) -> int:
    rows = bench_mod.bench_kernel_backends(repeats=args.repeats)
    rows += bench_mod.bench_mix_paths(repeats=args.repeats)
    text = bench_mod.kernel_csv(rows)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def _inspect_filter(args) -> int:
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    h, w = args.size
    params = FilterParams(T=args.T, height=h, width=w, cutoff_c=args.cutoff_c)
    for t in args.t or [0, args.T // 2, args.T]:
        filt = make_filter(params, t)
        latfile.write_pgm(
            os.path.join(out_dir, f"filter_t{t}.pgm"), latfile.render_unit_plane(filt.mask)
        )
        latfile.write_latent(
            os.path.join(out_dir, f"filter_t{t}.lat"), LatentGrid(filt.mask[None])
        )
    return 0


def _inspect_attn(args) -> int:
    if not args.run_dir:
        raise ParameterError("inspect --attn requires --run DIR")
    with open(os.path.join(args.run_dir, "manifest.txt"), "r", encoding="utf-8") as fh:
        cfg = config_from_manifest(fh.read())
    if not cfg.attn.active:
        raise ParameterError("the referenced run had attention modulation off")
    ts, _ = step_grid(cfg.sched.T, cfg.steps)
    t = args.t[-1] if args.t else ts[-1]
    block = args.block or sorted(cfg.attn.target_blocks)[0]
    keep = {(t, block): None}
    store = TapStore()
    z_native = generate_native(cfg, tap_store=store)
    seq = diffuse_upsampled(z_native, cfg)
    denoise_guided(seq, cfg, tap_store=store, attn_keep=keep)
    trio = keep[(t, block)]
    if trio is None:
        raise ParameterError(f"no attention recorded at step {t}, block {block!r}")
    out_dir = args.out or args.run_dir
    os.makedirs(out_dir, exist_ok=True)
    for kind in ("native_up", "high", "modulated"):
        matrix = trio[kind]
        if not (0 <= args.query < matrix.tokens):
            raise ParameterError(f"query {args.query} outside [0, {matrix.tokens})")
        heat = matrix.rows[args.query].reshape(matrix.spatial_h, matrix.spatial_w)
        latfile.write_pgm(
            os.path.join(out_dir, f"attn_{kind}.pgm"), latfile.render_plane(heat)
        )
        latfile.write_latent(
            os.path.join(out_dir, f"attn_{kind}.lat"), LatentGrid(matrix.rows[None])
        )
    return 0


def _read_matrix(path, spatial) -> AttentionMatrix:
    grid = latfile.read_latent(path)
    if grid.channels != 1:
        raise ParameterError(f"attention matrix file must be 1xNxN, got {grid.channels} channels")
    return AttentionMatrix(rows=grid.data[0], spatial_h=spatial[0], spatial_w=spatial[1])


def cmd_kernel(args) -> int:
    if args.kernel_op in ("fm-mix", "fm-mix-conv"):
        z_den = latfile.read_latent(args.z_denoised)
        z_dif = latfile.read_latent(args.z_diffused)
        params = FilterParams(
            T=args.T, height=z_den.height, width=z_den.width, cutoff_c=args.cutoff_c
        )
        filt = make_filter(params, args.t)
        op = fm_mix if args.kernel_op == "fm-mix" else fm_mix_conv
        latfile.write_latent(args.out, op(z_den, z_dif, filt))
    elif args.kernel_op == "make-filter":
        params = FilterParams(
            T=args.T, height=args.size[0], width=args.size[1], cutoff_c=args.cutoff_c
        )
        mask = make_filter(params, args.t).mask
        latfile.write_latent(args.out, LatentGrid(mask[None]))
    elif args.kernel_op == "upsample-attn":
        matrix = _read_matrix(args.matrix, args.spatial)
        out = upsample_attention(matrix, args.scale)
        latfile.write_latent(args.out, LatentGrid(out.rows[None]))
    else:
        native = _read_matrix(args.native, args.spatial)
        native_up = upsample_attention(native, args.scale)
        high = _read_matrix(
            args.high, (args.spatial[0] * args.scale, args.spatial[1] * args.scale)
        )
        cfg = AttnModConfig(mode="modulate", lam=args.lam)
        out = modulate_attention(native_up, high, cfg)
        latfile.write_latent(args.out, LatentGrid(out.rows[None]))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "bench":
            return cmd_bench(args)
        if args.command == "bench-kernels":
            return cmd_bench_kernels(args)
        if args.command == "inspect":
            return _inspect_filter(args) if args.filter else _inspect_attn(args)
        return cmd_kernel(args)
    except (FamdiffError, OSError) as exc:
        print(f"famdiff: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
