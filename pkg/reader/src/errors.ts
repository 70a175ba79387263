/** Malformed or corrupted .fus file; `offset` is the byte where parsing failed. */
export class FusedFormatError extends Error {
  readonly offset: number;

  constructor(message: string, offset: number) {
    super(message);
    this.name = "FusedFormatError";
    this.offset = offset;
  }
}

/** Malformed manifest.json or unsupported schema version. */
export class ManifestError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ManifestError";
  }
}
