/**
 * FAMLAT1 latent container: 8-byte magic "FAMLAT1\0", three little-endian
 * u32 fields (channels, height, width), then float32 little-endian samples,
 * row-major per channel. Strict: truncated or trailing bytes are rejected.
 */

import * as fs from "node:fs";

export const MAGIC = "FAMLAT1\0";
const HEADER_BYTES = MAGIC.length + 12;

/** A dense row-major float32 grid of shape (channels, height, width). */
export interface Latent {
  readonly channels: number;
  readonly height: number;
  readonly width: number;
  readonly data: Float32Array;
}

/** Raised for malformed FAMLAT1 bytes or inconsistent grid shapes. */
export class LatFormatError extends Error {}

export function makeLatent(
  channels: number,
  height: number,
  width: number,
  data: Float32Array,
): Latent {
  for (const [name, dim] of [["channels", channels], ["height", height], ["width", width]] as const) {
    if (!Number.isInteger(dim) || dim < 1) {
      throw new LatFormatError(`${name} must be a positive integer, got ${dim}`);
    }
  }
  if (data.length !== channels * height * width) {
    throw new LatFormatError(
      `data has ${data.length} samples, shape ${channels}x${height}x${width} needs ${channels * height * width}`,
    );
  }
  return { channels, height, width, data };
}

export function latentToBytes(lat: Latent): Buffer {
  const buf = Buffer.alloc(HEADER_BYTES + 4 * lat.data.length);
  buf.write(MAGIC, 0, "latin1");
  buf.writeUInt32LE(lat.channels, MAGIC.length);
  buf.writeUInt32LE(lat.height, MAGIC.length + 4);
  buf.writeUInt32LE(lat.width, MAGIC.length + 8);
  const view = new DataView(buf.buffer, buf.byteOffset + HEADER_BYTES);
  for (let i = 0; i < lat.data.length; i++) {
    view.setFloat32(4 * i, lat.data[i], true);
  }
  return buf;
}

export function latentFromBytes(blob: Buffer): Latent {
  if (blob.length < HEADER_BYTES) {
    throw new LatFormatError("latent file shorter than its header");
  }
  if (blob.toString("latin1", 0, MAGIC.length) !== MAGIC) {
    throw new LatFormatError("bad magic, not a FAMLAT1 file");
  }
  const channels = blob.readUInt32LE(MAGIC.length);
  const height = blob.readUInt32LE(MAGIC.length + 4);
  const width = blob.readUInt32LE(MAGIC.length + 8);
  if (channels < 1 || height < 1 || width < 1) {
    throw new LatFormatError(`invalid dimensions ${channels}x${height}x${width} in header`);
  }
  const expected = HEADER_BYTES + 4 * channels * height * width;
  if (blob.length < expected) {
    throw new LatFormatError(`payload truncated: expected ${expected} bytes, got ${blob.length}`);
  }
  if (blob.length > expected) {
    throw new LatFormatError(`trailing bytes: expected ${expected} bytes, got ${blob.length}`);
  }
  const count = channels * height * width;
  const data = new Float32Array(count);
  const view = new DataView(blob.buffer, blob.byteOffset + HEADER_BYTES);
  for (let i = 0; i < count; i++) {
    data[i] = view.getFloat32(4 * i, true);
  }
  return { channels, height, width, data };
}

export function readLatent(path: string): Latent {
  return latentFromBytes(fs.readFileSync(path));
}

export function writeLatent(path: string, lat: Latent): void {
  fs.writeFileSync(path, latentToBytes(lat));
}
