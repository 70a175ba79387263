"""Command-line interface.

Subcommands: rasterize, probmap, shift, fuse, eval, pipeline.  Progress and
diagnostics go to stderr; stdout carries exactly one JSON summary object per
successful run, so output is safe to pipe.  Exit codes: 0 success, 1 I/O
failure, 2 invalid input or parameters.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import ProbfuseError
from .evaluation import evaluate, load_ground_truth, parse_detections
from .fusion import ContextMapping, build_fused, read_rgb, write_fused
from .mask_io import (
    DOTA_CLASSES,
    rasterize,
    read_annotation_file,
    read_mask,
    write_mask,
)
from .misalignment import ShiftPolicy, ShiftSpec, apply_shift, sample_shift
from .pipeline import (
    PipelineConfig,
    mapping_from_json,
    regenerate,
    run_pipeline,
)
from .probability_maps import (
    Eq2Params,
    prob_map_eq1,
    prob_map_eq2,
    read_map_png,
    write_map_png,
)


def _emit(summary: dict) -> None:
    print(json.dumps(summary))


def _note(message: str) -> None:
    print(message, file=sys.stderr)


def _parse_mapping_arg(text: str) -> ContextMapping:
    if text.startswith("single:"):
        return ContextMapping.single(text.split(":", 1)[1])
    return mapping_from_json(text)


def cmd_rasterize(args) -> int:
    records = read_annotation_file(args.annotations)
    mask = rasterize(records, args.class_name, args.width, args.height)
    write_mask(mask, args.output)
    _emit(
        {
            "output": str(args.output),
            "class": args.class_name,
            "cells": int(mask.count()),
            "polygons": sum(1 for r in records if r.class_name == args.class_name),
        }
    )
    return 0


def cmd_probmap(args) -> int:
    mask = read_mask(args.mask)
    if args.method == "eq1":
        pmap = prob_map_eq1(mask)
    else:
        pmap = prob_map_eq2(mask, Eq2Params(args.alpha, args.radius))
    write_map_png(pmap, args.output)
    if args.figure:
        from .report import render_map_preview

        render_map_preview(mask, pmap, args.figure)
        _note(f"wrote preview figure {args.figure}")
    summary = {
        "output": str(args.output),
        "method": args.method,
        "min": float(pmap.values.min()),
        "max": float(pmap.values.max()),
    }
    if args.method == "eq2":
        summary["alpha"] = args.alpha
        summary["radius"] = args.radius
    _emit(summary)
    return 0


def cmd_shift(args) -> int:
    mask = read_mask(args.mask)
    h, w = mask.data.shape
    if args.dx is not None or args.dy is not None:
        if args.dx is None or args.dy is None:
            raise ProbfuseError("give both --dx and --dy, or neither")
        spec = ShiftSpec(args.dx, args.dy)
        source = "explicit"
    else:
        if args.image_id is None:
            raise ProbfuseError("sampling a shift needs --image-id (or give --dx/--dy)")
        policy = ShiftPolicy(args.min_frac, args.max_frac, args.seed)
        spec = sample_shift(policy, args.image_id, w, h)
        source = "sampled"
    shifted = apply_shift(mask, spec)
    write_mask(shifted, args.output)
    _emit(
        {
            "output": str(args.output),
            "dx": spec.dx,
            "dy": spec.dy,
            "source": source,
            "cells_in": int(mask.count()),
            "cells_out": int(shifted.count()),
        }
    )
    return 0


def cmd_fuse(args) -> int:
    image = read_rgb(args.image)
    mapping = _parse_mapping_arg(args.mapping)
    maps = []
    for pair in args.map or []:
        if "=" not in pair:
            raise ProbfuseError(f"--map expects CLASS=MAP.png, got {pair!r}")
        cls, path = pair.split("=", 1)
        maps.append((cls, read_map_png(path)))
    tensor = build_fused(image, maps, mapping)
    write_fused(tensor, args.output)
    _emit(
        {
            "output": str(args.output),
            "channels": list(tensor.channel_names),
            "height": tensor.height,
            "width": tensor.width,
        }
    )
    return 0


def cmd_eval(args) -> int:
    detections = parse_detections(Path(args.detections).read_text(encoding="utf-8"))
    classes = tuple(args.classes.split(",")) if args.classes else DOTA_CLASSES
    ground_truth = load_ground_truth(args.ground_truth, classes)
    report = evaluate(
        detections,
        ground_truth,
        threshold=args.iou,
        classes=classes,
        strict=not args.lenient,
        interpolation=args.interpolation,
        exclude_difficult=args.exclude_difficult,
    )
    if report.n_unknown_detections or report.n_unknown_ground_truths:
        _note(
            f"ignored {report.n_unknown_detections} detections and "
            f"{report.n_unknown_ground_truths} ground truths with unknown classes"
        )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "report.csv"
    csv_path.write_text(report.to_csv(), encoding="utf-8")
    (out_dir / "report.txt").write_text(report.to_text(), encoding="utf-8")
    _note(report.to_text().rstrip())
    figures = []
    if args.figures:
        from .report import render_eval_figures

        figures = [str(p) for p in render_eval_figures(report, out_dir)]
    _emit(
        {
            "map": report.map_value,
            "iou_threshold": report.iou_threshold,
            "per_class": {c: r.ap for c, r in report.per_class.items()},
            "csv": str(csv_path),
            "figures": figures,
        }
    )
    return 0


def cmd_pipeline(args) -> int:
    if args.from_manifest:
        if args.config is not None:
            raise ProbfuseError("--from-manifest replaces the config argument")
        written = regenerate(args.from_manifest, args.dataset_root, args.output_root)
        _emit({"regenerated": len(written), "manifest": str(args.from_manifest)})
        return 0
    if args.config is None:
        raise ProbfuseError("pipeline needs a config file (or --from-manifest)")
    cfg_path = Path(args.config)
    try:
        obj = json.loads(cfg_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ProbfuseError(f"config is not valid JSON: {exc}")
    cfg = PipelineConfig.from_json(obj, base_dir=cfg_path.parent)
    if args.threads is not None:
        cfg.threads = args.threads
    manifest = run_pipeline(cfg, dry_run=args.dry_run, progress=lambda i: _note(f"built {i}"))
    for warning in manifest["warnings"]:
        _note(f"warning: {warning}")
    summary = {
        "images": len(manifest["images"]),
        "channels": len(cfg.mapping.channel_order),
        "warnings": len(manifest["warnings"]),
        "dry_run": bool(args.dry_run),
    }
    if not args.dry_run:
        summary["manifest"] = str(cfg.output_root / "manifest.json")
    _emit(summary)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probfuse",
        description="Context masks to probability maps, fused tensors, and detection scores.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rasterize", help="rasterize one class of an annotation file to a mask PNG")
    p.add_argument("annotations", help="annotation text file")
    p.add_argument("--class", dest="class_name", required=True, help="class to rasterize")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("-o", "--output", required=True, help="mask PNG to write")
    p.set_defaults(func=cmd_rasterize)

    p = sub.add_parser("probmap", help="turn a mask PNG into a probability map PNG")
    p.add_argument("mask", help="binary mask PNG")
    p.add_argument("--method", choices=("eq1", "eq2"), default="eq1")
    p.add_argument("--alpha", type=float, default=1.0, help="decay rate (eq2)")
    p.add_argument("--radius", type=int, default=1, help="neighborhood radius in cells (eq2)")
    p.add_argument("-o", "--output", required=True, help="map PNG to write")
    p.add_argument("--figure", help="also render a mask/map preview figure to this path")
    p.set_defaults(func=cmd_probmap)

    p = sub.add_parser("shift", help="translate a mask by a sampled or explicit offset")
    p.add_argument("mask", help="binary mask PNG")
    p.add_argument("-o", "--output", required=True, help="shifted mask PNG to write")
    p.add_argument("--image-id", help="stream key for reproducible sampling")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--min-frac", type=float, default=0.05, help="min magnitude as width fraction")
    p.add_argument("--max-frac", type=float, default=0.10, help="max magnitude as width fraction")
    p.add_argument("--dx", type=int, help="explicit x offset (skips sampling)")
    p.add_argument("--dy", type=int, help="explicit y offset (skips sampling)")
    p.set_defaults(func=cmd_shift)

    p = sub.add_parser("fuse", help="fuse an RGB image with probability map PNGs")
    p.add_argument("image", help="RGB image")
    p.add_argument("-o", "--output", required=True, help="fused tensor file to write")
    p.add_argument(
        "--map",
        action="append",
        metavar="CLASS=MAP.png",
        help="probability map for one context class (repeatable)",
    )
    p.add_argument(
        "--mapping",
        default="indirect",
        help="direct, indirect, or single:CLASS (default: indirect)",
    )
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", help="score detections against ground truth")
    p.add_argument("detections", help="detections file: image_id class conf x0 y0 x1 y1")
    p.add_argument("--ground-truth", required=True, help="directory of annotation files")
    p.add_argument("--out-dir", default=".", help="where report.csv / report.txt go")
    p.add_argument("--iou", type=float, default=0.5, help="IoU threshold")
    p.add_argument(
        "--interpolation", choices=("all_point", "eleven_point"), default="all_point"
    )
    p.add_argument(
        "--lenient",
        action="store_true",
        help="count IoU equal to the threshold as a match (default requires strictly greater)",
    )
    p.add_argument("--exclude-difficult", action="store_true", help="ignore difficult ground truth")
    p.add_argument("--classes", help="comma-separated class list (default: DOTA classes)")
    p.add_argument("--figures", action="store_true", help="render PR curves and AP bars")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run a whole dataset to fused tensors + manifest")
    p.add_argument("config", nargs="?", help="pipeline config JSON")
    p.add_argument("--dry-run", action="store_true", help="plan only, write nothing")
    p.add_argument("--threads", type=int, help="worker threads (overrides config)")
    p.add_argument(
        "--from-manifest",
        metavar="MANIFEST",
        help="regenerate fused tensors from an existing manifest instead of a config",
    )
    p.add_argument("--dataset-root", help="override the manifest's recorded dataset root")
    p.add_argument("--output-root", help="write regenerated tensors under this root")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProbfuseError as exc:
        _note(f"error: {exc}")
        return 2
    except OSError as exc:
        _note(f"I/O error: {exc}")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
