"""End-to-end dataset runs: scan, build, manifest, regenerate.

A dataset directory holds ``images/*.png`` and ``annotations/*.txt`` with
matching stems.  One run rasterizes every context class per image, shifts
each mask by its reproducible sampled offset, turns the shifted masks into
probability maps, fuses them with RGB, and writes ``fused/<id>.fus`` plus
optional ``maps/<id>_<class>.png`` previews under the output root.

The run is summarized in ``manifest.json``.  The manifest carries no
timestamps or host state and records the exact shift applied to every
channel, so re-running the pipeline — or :func:`regenerate`, which replays
the recorded shifts instead of sampling — reproduces every fused file byte
for byte.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image

from .errors import ManifestError, ParameterError
from .fusion import ContextMapping, build_fused, read_rgb, write_fused
from .mask_io import DOTA_CLASSES, BinaryMask, read_annotation_file, rasterize
from .misalignment import ShiftPolicy, ShiftSpec, apply_shift, sample_shift
from .probability_maps import (
    Eq2Params,
    ProbabilityMap,
    prob_map_eq1,
    prob_map_eq2,
    write_map_png,
)

SCHEMA_VERSION = 1

_CONFIG_KEYS = {
    "dataset_root",
    "output_root",
    "method",
    "alpha",
    "radius",
    "mapping",
    "shift",
    "classes",
    "write_maps",
    "threads",
}


def mapping_from_json(obj) -> ContextMapping:
    """Accept the shorthand forms used in config files.

    ``"direct"`` / ``"indirect"`` select the stock mappings; an object may
    give ``{"mode": "single", "context_class": ...}``, restrict direct mode
    with ``{"mode": "direct", "classes": [...]}``, or spell out ``entries``
    (and optionally ``channel_order``) in full.
    """
    if isinstance(obj, ContextMapping):
        return obj
    if isinstance(obj, str):
        if obj == "direct":
            return ContextMapping.direct()
        if obj == "indirect":
            return ContextMapping.indirect()
        raise ParameterError(f"unknown mapping shorthand {obj!r}")
    if not isinstance(obj, dict):
        raise ParameterError("mapping must be a string or an object")
    mode = obj.get("mode")
    if mode == "single":
        if "context_class" not in obj:
            raise ParameterError("single mapping needs a context_class")
        return ContextMapping.single(obj["context_class"])
    if "entries" in obj:
        entries = tuple((c, tuple(t)) for c, t in obj["entries"])
        order = tuple(obj.get("channel_order", [c for c, _ in entries]))
        return ContextMapping(mode or "indirect", entries, order)
    if mode == "direct":
        return ContextMapping.direct(tuple(obj.get("classes", DOTA_CLASSES)))
    if mode == "indirect":
        return ContextMapping.indirect()
    raise ParameterError(f"cannot interpret mapping {obj!r}")


@dataclass
class PipelineConfig:
    dataset_root: Path
    method: str = "eq2"
    alpha: float = 1.0
    radius: int = 1
    mapping: ContextMapping = field(default_factory=ContextMapping.indirect)
    shift: ShiftPolicy = field(default_factory=ShiftPolicy)
    per_class_seeds: bool = True  # independent shift per (image, class) stream
    classes: tuple[str, ...] = DOTA_CLASSES
    output_root: Path | None = None
    write_maps: bool = True
    threads: int | None = None

    def __post_init__(self):
        self.dataset_root = Path(self.dataset_root)
        if self.output_root is None:
            self.output_root = self.dataset_root
        self.output_root = Path(self.output_root)
        self.classes = tuple(self.classes)
        if self.method not in ("eq1", "eq2"):
            raise ParameterError(f"unknown method {self.method!r}, expected eq1 or eq2")
        self.eq2_params  # validates alpha and radius even when method is eq1
        missing = [c for c in self.mapping.channel_order if c not in self.classes]
        if missing:
            raise ParameterError(f"mapping classes missing from the vocabulary: {missing}")
        if self.threads is not None and (not isinstance(self.threads, int) or self.threads < 1):
            raise ParameterError(f"threads must be a positive integer, got {self.threads!r}")

    @property
    def eq2_params(self) -> Eq2Params:
        return Eq2Params(self.alpha, self.radius)

    def to_json(self) -> dict:
        """The reproducibility-relevant part of the config (no paths, no
        thread count) as echoed into the manifest."""
        return {
            "method": self.method,
            "alpha": self.alpha,
            "radius": self.radius,
            "mapping": self.mapping.to_json(),
            "shift": {
                "min_frac": self.shift.min_frac,
                "max_frac": self.shift.max_frac,
                "master_seed": self.shift.master_seed,
                "per_class_seeds": self.per_class_seeds,
            },
            "classes": list(self.classes),
            "write_maps": self.write_maps,
        }

    @classmethod
    def from_json(cls, obj: dict, base_dir: str | Path = ".") -> "PipelineConfig":
        """Build a config from a parsed JSON object; relative paths are
        resolved against ``base_dir`` (typically the config file's folder)."""
        if not isinstance(obj, dict):
            raise ParameterError("pipeline config must be a JSON object")
        unknown = sorted(set(obj) - _CONFIG_KEYS)
        if unknown:
            raise ParameterError(f"unknown config keys: {unknown}")
        if "dataset_root" not in obj:
            raise ParameterError("pipeline config needs dataset_root")
        base = Path(base_dir)
        shift_blk = dict(obj.get("shift", {}))
        per_class = bool(shift_blk.pop("per_class_seeds", True))
        try:
            policy = ShiftPolicy(**shift_blk)
        except TypeError as exc:
            raise ParameterError(f"bad shift block: {exc}")
        return cls(
            dataset_root=base / obj["dataset_root"],
            method=obj.get("method", "eq2"),
            alpha=obj.get("alpha", 1.0),
            radius=obj.get("radius", 1),
            mapping=mapping_from_json(obj.get("mapping", "indirect")),
            shift=policy,
            per_class_seeds=per_class,
            classes=tuple(obj.get("classes", DOTA_CLASSES)),
            output_root=(base / obj["output_root"]) if "output_root" in obj else None,
            write_maps=bool(obj.get("write_maps", True)),
            threads=obj.get("threads"),
        )


@dataclass(frozen=True)
class DatasetItem:
    image_id: str
    image_path: Path
    annotation_path: Path | None


def scan_dataset(root: str | Path) -> list[DatasetItem]:
    """List ``images/*.png`` in id order, pairing each with its annotation
    file when one exists."""
    root = Path(root)
    images_dir = root / "images"
    ann_dir = root / "annotations"
    if not images_dir.is_dir():
        raise ParameterError(f"no images/ directory under {root}")
    items = []
    for path in sorted(images_dir.glob("*.png")):
        ann = ann_dir / (path.stem + ".txt")
        items.append(DatasetItem(path.stem, path, ann if ann.is_file() else None))
    return items


def _shift_key(cfg: PipelineConfig, image_id: str, cls: str) -> str:
    return f"{image_id}/{cls}" if cfg.per_class_seeds else image_id


def _map_or_zero(method: str, params: Eq2Params, mask: BinaryMask) -> ProbabilityMap:
    # An empty mask (class absent, or shifted fully out of frame) carries no
    # context: its channel is all zeros rather than an error.
    if mask.count() == 0:
        return ProbabilityMap(
            np.zeros(mask.data.shape, np.float32),
            method,
            params if method == "eq2" else None,
        )
    if method == "eq1":
        return prob_map_eq1(mask)
    return prob_map_eq2(mask, params)


def _image_meta(cfg: PipelineConfig, item: DatasetItem) -> tuple[dict, list[str], list]:
    """Shared head of the real build and the dry-run plan: parse annotations,
    sample shifts, lay out output paths."""
    warnings = []
    if item.annotation_path is None:
        warnings.append(f"{item.image_id}: no annotation file, context channels are zero")
        records = []
    else:
        records = read_annotation_file(item.annotation_path, cfg.classes)
        ann_rel = item.annotation_path.relative_to(cfg.dataset_root).as_posix()
    with Image.open(item.image_path) as img:
        w, h = img.size
    channels = []
    for cls in cfg.mapping.channel_order:
        spec = sample_shift(cfg.shift, _shift_key(cfg, item.image_id, cls), w, h)
        channels.append(
            {
                "class": cls,
                "dx": spec.dx,
                "dy": spec.dy,
                "polygons": sum(1 for r in records if r.class_name == cls),
                "map": f"maps/{item.image_id}_{cls}.png" if cfg.write_maps else None,
            }
        )
    entry = {
        "image_id": item.image_id,
        "image": item.image_path.relative_to(cfg.dataset_root).as_posix(),
        "annotations": ann_rel if item.annotation_path is not None else None,
        "width": w,
        "height": h,
        "fused": f"fused/{item.image_id}.fus",
        "channels": channels,
    }
    return entry, warnings, records


def _build_image(cfg: PipelineConfig, item: DatasetItem) -> tuple[dict, list[str]]:
    entry, warnings, records = _image_meta(cfg, item)
    w, h = entry["width"], entry["height"]
    image = read_rgb(item.image_path)
    maps = []
    for ch in entry["channels"]:
        mask = rasterize(records, ch["class"], w, h)
        shifted = apply_shift(mask, ShiftSpec(ch["dx"], ch["dy"]))
        pmap = _map_or_zero(cfg.method, cfg.eq2_params, shifted)
        maps.append((ch["class"], pmap))
        if ch["map"] is not None:
            write_map_png(pmap, cfg.output_root / ch["map"])
    fused = build_fused(image, maps, cfg.mapping)
    write_fused(fused, cfg.output_root / entry["fused"])
    return entry, warnings


def run_pipeline(
    cfg: PipelineConfig,
    dry_run: bool = False,
    progress: Callable[[str], None] | None = None,
) -> dict:
    """Process every image in the dataset and return the manifest.

    With ``dry_run`` the manifest is computed — including the shifts that
    would be applied — but nothing is rasterized or written.  ``progress``
    is called with each image id as it completes (order follows thread
    completion, not the manifest).
    """
    items = scan_dataset(cfg.dataset_root)
    manifest: dict = {
        "schema_version": SCHEMA_VERSION,
        "dataset_root": Path(
            os.path.relpath(cfg.dataset_root.resolve(), cfg.output_root.resolve())
        ).as_posix(),
        "config": cfg.to_json(),
    }
    if dry_run:
        results = [_image_meta(cfg, item)[:2] for item in items]
        manifest["dry_run"] = True
    else:
        (cfg.output_root / "fused").mkdir(parents=True, exist_ok=True)
        if cfg.write_maps:
            (cfg.output_root / "maps").mkdir(parents=True, exist_ok=True)

        def work(item: DatasetItem) -> tuple[dict, list[str]]:
            out = _build_image(cfg, item)
            if progress is not None:
                progress(item.image_id)
            return out

        n = _n_threads(cfg)
        if n == 1:
            results = [work(item) for item in items]
        else:
            with ThreadPoolExecutor(max_workers=n) as pool:
                results = list(pool.map(work, items))
    manifest["images"] = [entry for entry, _ in results]
    manifest["warnings"] = [w for _, ws in results for w in ws]
    if not dry_run:
        write_manifest(manifest, cfg.output_root / "manifest.json")
    return manifest


def _n_threads(cfg: PipelineConfig) -> int:
    if cfg.threads is not None:
        return cfg.threads
    env = os.environ.get("PROBFUSE_THREADS", "").strip()
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ParameterError(f"PROBFUSE_THREADS must be an integer, got {env!r}")
        if value < 1:
            raise ParameterError(f"PROBFUSE_THREADS must be >= 1, got {value}")
        return value
    return min(8, os.cpu_count() or 1)


def write_manifest(manifest: dict, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def read_manifest(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest: {exc}")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}")
    _validate_manifest(obj)
    return obj


def _validate_manifest(obj) -> None:
    if not isinstance(obj, dict):
        raise ManifestError("manifest root must be an object")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise ManifestError(
            f"unsupported schema_version {obj.get('schema_version')!r}, expected {SCHEMA_VERSION}"
        )
    for key, typ in (("dataset_root", str), ("config", dict), ("images", list)):
        if not isinstance(obj.get(key), typ):
            raise ManifestError(f"manifest key {key!r} missing or of wrong type")
    cfg = obj["config"]
    for key in ("method", "mapping", "shift", "classes"):
        if key not in cfg:
            raise ManifestError(f"manifest config lacks {key!r}")
    for i, entry in enumerate(obj["images"]):
        if not isinstance(entry, dict):
            raise ManifestError(f"images[{i}] must be an object")
        for key in ("image_id", "image", "width", "height", "fused", "channels"):
            if key not in entry:
                raise ManifestError(f"images[{i}] lacks {key!r}")
        for j, ch in enumerate(entry["channels"]):
            for key in ("class", "dx", "dy"):
                if key not in ch:
                    raise ManifestError(f"images[{i}].channels[{j}] lacks {key!r}")


def regenerate(
    manifest_path: str | Path,
    dataset_root: str | Path | None = None,
    output_root: str | Path | None = None,
) -> list[Path]:
    """Rebuild every fused tensor a manifest describes, byte for byte.

    Shifts are replayed from the manifest, not resampled, so the result does
    not depend on the shift policy still matching.  Inputs are read from the
    manifest's recorded dataset root unless overridden; outputs default to
    the manifest's own directory.
    """
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    base = manifest_path.parent
    data_root = Path(dataset_root) if dataset_root is not None else base / manifest["dataset_root"]
    out_root = Path(output_root) if output_root is not None else base
    blk = manifest["config"]
    mapping = mapping_from_json(blk["mapping"])
    method = blk["method"]
    params = Eq2Params(blk.get("alpha", 1.0), blk.get("radius", 1))
    classes = tuple(blk["classes"])

    written = []
    for entry in manifest["images"]:
        image = read_rgb(data_root / entry["image"])
        h, w = image.shape[:2]
        if (w, h) != (entry["width"], entry["height"]):
            raise ManifestError(
                f"{entry['image_id']}: image on disk is {w}x{h}, "
                f"manifest recorded {entry['width']}x{entry['height']}"
            )
        records = (
            read_annotation_file(data_root / entry["annotations"], classes)
            if entry["annotations"]
            else []
        )
        maps = []
        for ch in entry["channels"]:
            mask = rasterize(records, ch["class"], w, h)
            shifted = apply_shift(mask, ShiftSpec(ch["dx"], ch["dy"]))
            maps.append((ch["class"], _map_or_zero(method, params, shifted)))
        fused = build_fused(image, maps, mapping)
        out = out_root / entry["fused"]
        out.parent.mkdir(parents=True, exist_ok=True)
        write_fused(fused, out)
        written.append(out)
    return written
