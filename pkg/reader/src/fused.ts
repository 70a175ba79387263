import { readFileSync } from "node:fs";
import { crc32 } from "node:zlib";

import { FusedFormatError } from "./errors.js";

const MAGIC = [0x46, 0x55, 0x53, 0x45]; // "FUSE"
const FORMAT_VERSION = 1;
const HEADER_BYTES = 18; // magic + u16 version + u32 C, H, W
const MIN_FILE_BYTES = HEADER_BYTES + 4; // header + CRC footer

// Float32Array views assume platform byte order; the payload is little-endian.
const LITTLE_ENDIAN = new Uint8Array(new Uint32Array([1]).buffer)[0] === 1;

/** One parsed .fus file: planar C×H×W float32 stack, channels 0-2 are RGB. */
export class FusedRecord {
  readonly channelNames: readonly string[];
  readonly channels: number;
  readonly height: number;
  readonly width: number;
  /** Planar row-major payload, length channels*height*width. */
  readonly data: Float32Array;
  readonly sourcePath: string;

  constructor(
    channelNames: readonly string[],
    channels: number,
    height: number,
    width: number,
    data: Float32Array,
    sourcePath: string,
  ) {
    this.channelNames = channelNames;
    this.channels = channels;
    this.height = height;
    this.width = width;
    this.data = data;
    this.sourcePath = sourcePath;
  }

  /** View (no copy) of one H×W plane. */
  channel(index: number): Float32Array {
    if (!Number.isInteger(index) || index < 0 || index >= this.channels) {
      throw new RangeError(`channel ${index} out of range [0, ${this.channels})`);
    }
    const plane = this.height * this.width;
    return this.data.subarray(index * plane, (index + 1) * plane);
  }
}

/** Parse an in-memory .fus blob. `sourcePath` only labels error messages. */
export function parseFused(blob: Uint8Array, sourcePath = "<buffer>"): FusedRecord {
  if (blob.length < MIN_FILE_BYTES) {
    throw new FusedFormatError(
      `${sourcePath}: truncated file (${blob.length} bytes)`,
      blob.length,
    );
  }
  const view = new DataView(blob.buffer, blob.byteOffset, blob.byteLength);
  for (let i = 0; i < 4; i++) {
    if (blob[i] !== MAGIC[i]) {
      throw new FusedFormatError(`${sourcePath}: bad magic`, 0);
    }
  }
  const version = view.getUint16(4, true);
  if (version !== FORMAT_VERSION) {
    throw new FusedFormatError(
      `${sourcePath}: unsupported format version ${version}`,
      4,
    );
  }

  // Checksum before interpreting anything past the identification header,
  // so corrupted interior bytes can never steer the parse.
  const crcStored = view.getUint32(blob.length - 4, true);
  const crcActual = crc32(blob.subarray(0, blob.length - 4));
  if (crcStored !== crcActual) {
    throw new FusedFormatError(
      `${sourcePath}: CRC mismatch (stored 0x${hex8(crcStored)}, computed 0x${hex8(crcActual)})`,
      blob.length - 4,
    );
  }

  const channels = view.getUint32(6, true);
  const height = view.getUint32(10, true);
  const width = view.getUint32(14, true);

  const decoder = new TextDecoder("utf-8", { fatal: true });
  const names: string[] = [];
  let pos = HEADER_BYTES;
  for (let c = 0; c < channels; c++) {
    if (pos + 2 > blob.length) {
      throw new FusedFormatError(`${sourcePath}: truncated channel name table`, pos);
    }
    const n = view.getUint16(pos, true);
    pos += 2;
    if (pos + n > blob.length) {
      throw new FusedFormatError(`${sourcePath}: truncated channel name`, pos);
    }
    let name: string;
    try {
      name = decoder.decode(blob.subarray(pos, pos + n));
    } catch {
      throw new FusedFormatError(`${sourcePath}: channel name is not UTF-8`, pos);
    }
    names.push(name);
    pos += n;
  }

  const count = channels * height * width;
  const expected = pos + count * 4 + 4;
  if (blob.length !== expected) {
    throw new FusedFormatError(
      `${sourcePath}: file is ${blob.length} bytes, header implies ${expected}`,
      pos,
    );
  }
  const data = readFloats(blob, view, pos, count);
  validateContent(names, data, sourcePath, pos);
  return new FusedRecord(names, channels, height, width, data, sourcePath);
}

/** Load and CRC-check a .fus file; bit-identical to what the writer was given. */
export function loadFused(path: string): FusedRecord {
  return parseFused(readFileSync(path), path);
}

function readFloats(
  blob: Uint8Array,
  view: DataView,
  pos: number,
  count: number,
): Float32Array {
  if (LITTLE_ENDIAN) {
    // copy into an owned, aligned buffer; Node Buffers alias a shared pool,
    // so reusing blob.buffer (or Buffer#slice views of it) would misread
    const bytes = new Uint8Array(count * 4);
    bytes.set(blob.subarray(pos, pos + count * 4));
    return new Float32Array(bytes.buffer, 0, count);
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = view.getFloat32(pos + i * 4, true);
  }
  return data;
}

function validateContent(
  names: string[],
  data: Float32Array,
  sourcePath: string,
  pos: number,
): void {
  const fail = (why: string): never => {
    throw new FusedFormatError(`${sourcePath}: invalid tensor content: ${why}`, pos);
  };
  if (names.length < 3 || names[0] !== "R" || names[1] !== "G" || names[2] !== "B") {
    fail("first three channels must be R, G, B");
  }
  if (new Set(names).size !== names.length) {
    fail("channel names must be unique");
  }
  for (let i = 0; i < data.length; i++) {
    const v = data[i] as number;
    if (!(v >= 0 && v <= 1)) {
      // also catches NaN: no comparison with NaN is true
      fail(`value ${v} at element ${i} outside [0, 1]`);
    }
  }
}

function hex8(value: number): string {
  return value.toString(16).padStart(8, "0");
}
