import { readFileSync } from "node:fs";
import { dirname, resolve } from "node:path";

import { ManifestError } from "./errors.js";
import { FusedRecord, loadFused } from "./fused.js";

const SCHEMA_VERSION = 1;

/** Shift provenance for one context channel of one image. */
export interface ChannelShift {
  class: string;
  dx: number;
  dy: number;
}

/** Annotation metadata attached to each dataset item. */
export interface ItemMeta {
  imageId: string;
  /** Source image path, relative to the dataset root. */
  image: string;
  /** Annotation file path relative to the dataset root, or null if absent. */
  annotations: string | null;
  width: number;
  height: number;
  /** Full class vocabulary the dataset was built with. */
  classes: readonly string[];
  /** The exact translation applied to each context channel's mask. */
  shifts: ChannelShift[];
  /** Resolved path of the fused file. */
  fusedPath: string;
}

export type DatasetItem =
  | { ok: true; meta: ItemMeta; record: FusedRecord }
  | { ok: false; meta: ItemMeta; error: string };

export interface Manifest {
  schema_version: number;
  dataset_root: string;
  config: Record<string, unknown>;
  images: ManifestImage[];
  warnings: string[];
}

interface ManifestImage {
  image_id: string;
  image: string;
  annotations: string | null;
  width: number;
  height: number;
  fused: string;
  channels: { class: string; dx: number; dy: number }[];
}

/** Read and validate a pipeline manifest. */
export function readManifest(path: string): Manifest {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (exc) {
    throw new ManifestError(`cannot read manifest: ${message(exc)}`);
  }
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (exc) {
    throw new ManifestError(`manifest is not valid JSON: ${message(exc)}`);
  }
  validateManifest(obj);
  return obj;
}

/**
 * Yield every image of a dataset in manifest order, fused tensor plus
 * metadata. A fused file that is missing or unreadable produces a
 * per-item error instead of aborting the iteration.
 */
export function* iterDataset(manifestPath: string): Generator<DatasetItem> {
  const manifest = readManifest(manifestPath);
  const base = dirname(resolve(manifestPath));
  const config = manifest.config as { classes?: unknown };
  const classes = Array.isArray(config.classes)
    ? (config.classes as string[])
    : [];
  for (const entry of manifest.images) {
    const meta: ItemMeta = {
      imageId: entry.image_id,
      image: entry.image,
      annotations: entry.annotations ?? null,
      width: entry.width,
      height: entry.height,
      classes,
      shifts: entry.channels.map((c) => ({ class: c.class, dx: c.dx, dy: c.dy })),
      fusedPath: resolve(base, entry.fused),
    };
    try {
      yield { ok: true, meta, record: loadFused(meta.fusedPath) };
    } catch (exc) {
      yield { ok: false, meta, error: `${meta.fusedPath}: ${message(exc)}` };
    }
  }
}

function validateManifest(obj: unknown): asserts obj is Manifest {
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new ManifestError("manifest root must be an object");
  }
  const root = obj as Record<string, unknown>;
  if (root.schema_version !== SCHEMA_VERSION) {
    throw new ManifestError(
      `unsupported schema_version ${JSON.stringify(root.schema_version)}, expected ${SCHEMA_VERSION}`,
    );
  }
  if (typeof root.dataset_root !== "string") {
    throw new ManifestError("manifest key 'dataset_root' missing or of wrong type");
  }
  if (typeof root.config !== "object" || root.config === null) {
    throw new ManifestError("manifest key 'config' missing or of wrong type");
  }
  if (!Array.isArray(root.images)) {
    throw new ManifestError("manifest key 'images' missing or of wrong type");
  }
  root.images.forEach((entry, i) => {
    if (typeof entry !== "object" || entry === null) {
      throw new ManifestError(`images[${i}] must be an object`);
    }
    for (const key of ["image_id", "image", "width", "height", "fused", "channels"]) {
      if (!(key in entry)) {
        throw new ManifestError(`images[${i}] lacks '${key}'`);
      }
    }
    (entry.channels as unknown[]).forEach((ch, j) => {
      for (const key of ["class", "dx", "dy"]) {
        if (typeof ch !== "object" || ch === null || !(key in ch)) {
          throw new ManifestError(`images[${i}].channels[${j}] lacks '${key}'`);
        }
      }
    });
  });
}

function message(exc: unknown): string {
  return exc instanceof Error ? exc.message : String(exc);
}
