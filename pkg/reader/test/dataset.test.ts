import { cpSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, describe, expect, test } from "vitest";

import { ManifestError, iterDataset, readManifest } from "../src/index.js";
import { GOLDEN } from "./util.js";

const MANIFEST = join(GOLDEN, "dataset", "manifest.json");
const tempDirs: string[] = [];

function tempCopyOfDataset(): string {
  const dir = mkdtempSync(join(tmpdir(), "fused-reader-"));
  tempDirs.push(dir);
  cpSync(join(GOLDEN, "dataset"), dir, { recursive: true });
  return dir;
}

afterAll(() => {
  for (const dir of tempDirs) rmSync(dir, { recursive: true, force: true });
});

describe("iterDataset", () => {
  test("yields every image in manifest order with provenance", () => {
    const manifest = JSON.parse(readFileSync(MANIFEST, "utf-8"));
    const items = [...iterDataset(MANIFEST)];
    expect(items.map((i) => i.meta.imageId)).toEqual(
      manifest.images.map((e: { image_id: string }) => e.image_id),
    );
    for (const [k, item] of items.entries()) {
      expect(item.ok).toBe(true);
      if (!item.ok) continue;
      const entry = manifest.images[k];
      expect(item.meta.classes).toEqual(manifest.config.classes);
      expect(item.meta.annotations).toBe(entry.annotations);
      expect(item.record.height).toBe(item.meta.height);
      expect(item.record.width).toBe(item.meta.width);
      // channels after RGB line up with the shift provenance
      expect([...item.record.channelNames].slice(3)).toEqual(
        item.meta.shifts.map((s) => s.class),
      );
      for (const shift of item.meta.shifts) {
        const mag = Math.hypot(shift.dx, shift.dy);
        expect(mag).toBeGreaterThanOrEqual(0.05 * item.meta.width - 0.5);
        expect(mag).toBeLessThanOrEqual(0.1 * item.meta.width + 0.5);
      }
    }
  });

  test("missing fused file is a per-item error, iteration continues", () => {
    const dir = tempCopyOfDataset();
    rmSync(join(dir, "fused", "P0001.fus"));
    const items = [...iterDataset(join(dir, "manifest.json"))];
    expect(items.map((i) => i.ok)).toEqual([true, false, true]);
    const failed = items[1]!;
    expect(failed.ok).toBe(false);
    if (!failed.ok) {
      expect(failed.meta.imageId).toBe("P0001");
      expect(failed.error).toContain("P0001.fus");
      expect(failed.error).toMatch(/ENOENT/);
    }
  });

  test("corrupted fused file is a per-item error too", () => {
    const dir = tempCopyOfDataset();
    const victim = join(dir, "fused", "P0002.fus");
    const blob = new Uint8Array(readFileSync(victim));
    blob[40] = (blob[40] as number) ^ 0x08;
    writeFileSync(victim, blob);
    const items = [...iterDataset(join(dir, "manifest.json"))];
    expect(items.map((i) => i.ok)).toEqual([true, true, false]);
    const failed = items[2]!;
    if (!failed.ok) expect(failed.error).toMatch(/CRC mismatch/);
  });

  test("empty manifest yields an empty iteration", () => {
    const items = [...iterDataset(join(GOLDEN, "empty", "manifest.json"))];
    expect(items).toEqual([]);
  });
});

describe("readManifest", () => {
  test("parses the golden manifest", () => {
    const manifest = readManifest(MANIFEST);
    expect(manifest.schema_version).toBe(1);
    expect(manifest.images).toHaveLength(3);
    expect(manifest.warnings).toEqual([]);
  });

  test("rejects an unsupported schema version", () => {
    const dir = tempCopyOfDataset();
    const path = join(dir, "manifest.json");
    const obj = JSON.parse(readFileSync(path, "utf-8"));
    obj.schema_version = 99;
    writeFileSync(path, JSON.stringify(obj));
    expect(() => readManifest(path)).toThrow(ManifestError);
    expect(() => [...iterDataset(path)]).toThrow(/schema_version/);
  });

  test("rejects structural damage with a path to the problem", () => {
    const dir = tempCopyOfDataset();
    const path = join(dir, "manifest.json");
    const obj = JSON.parse(readFileSync(path, "utf-8"));
    delete obj.images[1].fused;
    writeFileSync(path, JSON.stringify(obj));
    expect(() => readManifest(path)).toThrow(/images\[1\] lacks 'fused'/);
  });

  test("rejects non-JSON and missing files", () => {
    const dir = tempCopyOfDataset();
    const path = join(dir, "manifest.json");
    writeFileSync(path, "{nope");
    expect(() => readManifest(path)).toThrow(/not valid JSON/);
    expect(() => readManifest(join(dir, "absent.json"))).toThrow(/cannot read manifest/);
  });
});
