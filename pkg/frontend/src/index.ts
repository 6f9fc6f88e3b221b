/**
 * Bindings for the famdiff mixing kernels.
 *
 * Each bound function shells out to the famdiff CLI's stateless kernel
 * subcommands, exchanging grids through the FAMLAT1 container. The boundary
 * holds no caches: equal inputs always produce equal bytes. Set FAMDIFF_BIN
 * to point at a specific famdiff executable (defaults to PATH lookup).
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { Latent, LatFormatError, readLatent, writeLatent } from "./famlat.js";

export {
  Latent,
  LatFormatError,
  latentFromBytes,
  latentToBytes,
  makeLatent,
  readLatent,
  writeLatent,
} from "./famlat.js";

export const VERSION = "0.1.0";

/** Raised when the core rejects a call; carries the core's error text. */
export class KernelError extends Error {}

const KERNELS = [
  "makeFilter",
  "fmMix",
  "fmMixConv",
  "upsampleAttention",
  "modulateAttention",
] as const;

export function version(): string {
  return VERSION;
}

/** Names of the bound kernels, for introspection. */
export function boundKernels(): string[] {
  return [...KERNELS];
}

/** Version string reported by the famdiff executable that backs the calls. */
export function coreVersion(): string {
  const proc = spawnSync(famdiffBin(), ["--version"], { encoding: "utf8" });
  if (proc.error) {
    throw new KernelError(`failed to launch famdiff: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    throw new KernelError(coreErrorText(proc.stderr, proc.status));
  }
  return proc.stdout.trim();
}

function famdiffBin(): string {
  return process.env.FAMDIFF_BIN ?? "famdiff";
}

function coreErrorText(stderr: string | null, status: number | null): string {
  const text = (stderr ?? "").trim();
  if (text.length > 0) {
    const last = text.split("\n").at(-1) as string;
    return last.replace(/^famdiff: error: /, "");
  }
  return `famdiff exited with status ${status}`;
}

function runKernel(args: string[], inputs: Record<string, Latent>): Latent {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "famdiff-bind-"));
  try {
    const argv = ["kernel", ...args];
    for (const [flag, lat] of Object.entries(inputs)) {
      const file = path.join(dir, `${flag.replace(/^--/, "")}.lat`);
      writeLatent(file, lat);
      argv.push(flag, file);
    }
    const outFile = path.join(dir, "out.lat");
    argv.push("--out", outFile);
    const proc = spawnSync(famdiffBin(), argv, { encoding: "utf8" });
    if (proc.error) {
      throw new KernelError(`failed to launch famdiff: ${proc.error.message}`);
    }
    if (proc.status !== 0) {
      throw new KernelError(coreErrorText(proc.stderr, proc.status));
    }
    return readLatent(outFile);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}

function checkStep(t: number, T: number): void {
  for (const [name, value] of [["t", t], ["T", T]] as const) {
    if (!Number.isInteger(value) || value < 0) {
      throw new LatFormatError(`${name} must be a non-negative integer, got ${value}`);
    }
  }
}

function checkSameShape(a: Latent, b: Latent): void {
  if (a.channels !== b.channels || a.height !== b.height || a.width !== b.width) {
    throw new LatFormatError(
      `shape mismatch: ${a.channels}x${a.height}x${a.width} vs ${b.channels}x${b.height}x${b.width}`,
    );
  }
}

function checkMatrix(name: string, m: Latent, spatialH: number, spatialW: number): void {
  const tokens = spatialH * spatialW;
  if (m.channels !== 1 || m.height !== tokens || m.width !== tokens) {
    throw new LatFormatError(
      `${name} must be 1x${tokens}x${tokens} for a ${spatialH}x${spatialW} token grid, ` +
        `got ${m.channels}x${m.height}x${m.width}`,
    );
  }
}

/**
 * Time-annealed high-pass mask for an h x w spectrum, as a 1xHxW grid.
 */
export function makeFilter(
  height: number,
  width: number,
  t: number,
  T: number,
  cutoffC = 0.5,
): Latent {
  checkStep(t, T);
  return runKernel(
    ["make-filter", "--size", `${height}x${width}`, "--t", `${t}`, "--T", `${T}`,
     "--cutoff-c", `${cutoffC}`],
    {},
  );
}

/**
 * Spectral blend: high-pass of the denoised grid plus the complementary
 * low-pass of the diffused grid, annealed by t/T.
 */
export function fmMix(
  zDenoised: Latent,
  zDiffused: Latent,
  t: number,
  T: number,
  cutoffC = 0.5,
): Latent {
  checkSameShape(zDenoised, zDiffused);
  checkStep(t, T);
  return runKernel(
    ["fm-mix", "--t", `${t}`, "--T", `${T}`, "--cutoff-c", `${cutoffC}`],
    { "--z-denoised": zDenoised, "--z-diffused": zDiffused },
  );
}

/** Same blend computed as a circular convolution in the spatial domain. */
export function fmMixConv(
  zDenoised: Latent,
  zDiffused: Latent,
  t: number,
  T: number,
  cutoffC = 0.5,
): Latent {
  checkSameShape(zDenoised, zDiffused);
  checkStep(t, T);
  return runKernel(
    ["fm-mix-conv", "--t", `${t}`, "--T", `${T}`, "--cutoff-c", `${cutoffC}`],
    { "--z-denoised": zDenoised, "--z-diffused": zDiffused },
  );
}

/**
 * Row-stochastic upsampling of an attention matrix whose tokens form a
 * spatialH x spatialW grid, scaling token coordinates by an integer factor.
 */
export function upsampleAttention(
  matrix: Latent,
  spatialH: number,
  spatialW: number,
  scale: number,
): Latent {
  checkMatrix("matrix", matrix, spatialH, spatialW);
  return runKernel(
    ["upsample-attn", "--spatial", `${spatialH}x${spatialW}`, "--scale", `${scale}`],
    { "--matrix": matrix },
  );
}

/**
 * Upsample the native-resolution attention matrix, then blend it with the
 * high-resolution one: lambda * upsampled + (1 - lambda) * high.
 */
export function modulateAttention(
  native: Latent,
  high: Latent,
  spatialH: number,
  spatialW: number,
  scale: number,
  lambda = 0.7,
): Latent {
  checkMatrix("native", native, spatialH, spatialW);
  checkMatrix("high", high, spatialH * scale, spatialW * scale);
  return runKernel(
    ["modulate-attn", "--spatial", `${spatialH}x${spatialW}`, "--scale", `${scale}`,
     "--lambda", `${lambda}`],
    { "--native": native, "--high": high },
  );
}
