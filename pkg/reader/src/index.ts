export { FusedFormatError, ManifestError } from "./errors.js";
export { FusedRecord, loadFused, parseFused } from "./fused.js";
export {
  iterDataset,
  readManifest,
  type ChannelShift,
  type DatasetItem,
  type ItemMeta,
  type Manifest,
} from "./dataset.js";
