import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import {
  KernelError,
  Latent,
  LatFormatError,
  fmMix,
  fmMixConv,
  latentToBytes,
  makeFilter,
  makeLatent,
  modulateAttention,
  readLatent,
  upsampleAttention,
  boundKernels,
  coreVersion,
  version,
} from "../src/index.js";

const FIXTURES = path.join(path.dirname(fileURLToPath(import.meta.url)), "..", "fixtures");

function fixture(name: string): Latent {
  return readLatent(path.join(FIXTURES, name));
}

function bytes(lat: Latent): Buffer {
  return latentToBytes(lat);
}

const den = fixture("fm_den_8x8.lat");
const dif = fixture("fm_dif_8x8.lat");
const native = fixture("attn_native_4x4.lat");
const high = fixture("attn_high_8x8.lat");

describe("bound kernels against golden fixtures", () => {
  it("fmMix matches the core output byte for byte", () => {
    expect(bytes(fmMix(den, dif, 500, 1000)).equals(bytes(fixture("fm_mix_t500.lat")))).toBe(true);
  });

  it("fmMixConv matches the core output byte for byte", () => {
    expect(bytes(fmMixConv(den, dif, 500, 1000)).equals(bytes(fixture("fm_mix_conv_t500.lat")))).toBe(true);
  });

  it("makeFilter matches the core mask byte for byte", () => {
    expect(bytes(makeFilter(8, 8, 500, 1000)).equals(bytes(fixture("filter_8x8_t500.lat")))).toBe(true);
  });

  it("upsampleAttention matches the core output byte for byte", () => {
    expect(bytes(upsampleAttention(native, 4, 4, 2)).equals(bytes(fixture("attn_up_s2.lat")))).toBe(true);
  });

  it("modulateAttention matches the core output byte for byte", () => {
    expect(bytes(modulateAttention(native, high, 4, 4, 2, 0.7)).equals(bytes(fixture("attn_mod_l07.lat")))).toBe(true);
  });
});

describe("degenerate parameter identities", () => {
  it("mixing at t = T returns the denoised grid unchanged", () => {
    expect(bytes(fmMix(den, dif, 1000, 1000)).equals(bytes(den))).toBe(true);
  });

  it("lambda = 0 returns the high-resolution matrix unchanged", () => {
    expect(bytes(modulateAttention(native, high, 4, 4, 2, 0)).equals(bytes(high))).toBe(true);
  });

  it("scale 1 with lambda = 1 returns the native matrix unchanged", () => {
    expect(bytes(modulateAttention(native, native, 4, 4, 1, 1)).equals(bytes(native))).toBe(true);
  });
});

describe("boundary behavior", () => {
  it("holds no state between calls", () => {
    const first = bytes(fmMix(den, dif, 250, 1000));
    const second = bytes(fmMix(den, dif, 250, 1000));
    expect(first.equals(second)).toBe(true);
  });

  it("validates shapes before dispatch", () => {
    const small = makeLatent(1, 4, 4, new Float32Array(16));
    expect(() => fmMix(den, small, 500, 1000)).toThrow(LatFormatError);
    expect(() => upsampleAttention(den, 4, 4, 2)).toThrow(/1x16x16/);
  });

  it("surfaces core rejections with the core's error text", () => {
    expect(() => fmMix(den, dif, 2000, 1000)).toThrow(KernelError);
    expect(() => fmMix(den, dif, 2000, 1000)).toThrow(/t/);
  });

  it("reports binding and core versions", () => {
    expect(version()).toBe("0.1.0");
    expect(coreVersion()).toMatch(/^famdiff /);
    expect(boundKernels()).toEqual([
      "makeFilter", "fmMix", "fmMixConv", "upsampleAttention", "modulateAttention",
    ]);
  });
});
