import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { crc32 } from "node:zlib";

import { expect } from "vitest";

import { FusedFormatError } from "../src/errors.js";

export const GOLDEN = join(dirname(fileURLToPath(import.meta.url)), "golden");

export function goldenBytes(...parts: string[]): Uint8Array {
  return new Uint8Array(readFileSync(join(GOLDEN, ...parts)));
}

/** Serialize floats exactly as the file stores them (little-endian). */
export function leBytes(data: Float32Array): Uint8Array {
  const out = new Uint8Array(data.length * 4);
  const view = new DataView(out.buffer);
  for (let i = 0; i < data.length; i++) {
    view.setFloat32(i * 4, data[i] as number, true);
  }
  return out;
}

export function sha256(bytes: Uint8Array): string {
  return createHash("sha256").update(bytes).digest("hex");
}

/** Rewrite the CRC footer after deliberately patching body bytes. */
export function fixCrc(blob: Uint8Array): Uint8Array {
  const view = new DataView(blob.buffer, blob.byteOffset, blob.byteLength);
  view.setUint32(blob.length - 4, crc32(blob.subarray(0, blob.length - 4)), true);
  return blob;
}

export function formatErrorOf(fn: () => unknown): FusedFormatError {
  try {
    fn();
  } catch (exc) {
    expect(exc).toBeInstanceOf(FusedFormatError);
    return exc as FusedFormatError;
  }
  throw new Error("expected a FusedFormatError, nothing was thrown");
}

export interface ExpectedFile {
  channelNames: string[];
  channels: number;
  height: number;
  width: number;
  payloadSha256: string;
  samples: [number, number][];
}

export function expectedTable(name: string): Record<string, ExpectedFile> {
  return JSON.parse(readFileSync(join(GOLDEN, name), "utf-8"));
}
