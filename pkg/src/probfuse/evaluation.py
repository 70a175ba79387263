"""Detection scoring: IoU matching, per-class average precision, mAP.

A detection is a true positive when its IoU with a not-yet-matched ground
truth of the same image and class strictly exceeds the threshold (0.5 by
default); each ground truth can absorb one detection, later hits are false
positives.  AP integrates the interpolated precision-recall step curve
(all-point by default, 11-point available); mAP averages AP over the
classes that have at least one ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AnnotationParseError, ParameterError
from .mask_io import DOTA_CLASSES, AnnotationRecord, read_annotation_file


@dataclass(frozen=True)
class Box:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(np.isfinite(v) for v in vals):
            raise ParameterError(f"box coordinates must be finite, got {vals}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ParameterError(f"degenerate box {vals}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class Detection:
    image_id: str
    class_name: str
    box: Box
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ParameterError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class GroundTruth:
    image_id: str
    class_name: str
    box: Box
    difficult: bool = False


def iou(a: Box, b: Box) -> float:
    """Intersection area over union area, in [0, 1]."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


@dataclass
class MatchResult:
    """TP/FP labels aligned with the detection input order."""

    tp: np.ndarray  # bool; True where detection is a true positive
    excluded: np.ndarray  # bool; unknown class or ignored via difficult rule
    n_unknown_detections: int
    n_unknown_ground_truths: int


def match_detections(
    detections: Sequence[Detection],
    ground_truths: Sequence[GroundTruth],
    threshold: float = 0.5,
    classes: Sequence[str] | None = None,
    strict: bool = True,
    exclude_difficult: bool = False,
) -> MatchResult:
    """Greedy confidence-ordered matching per (image, class).

    Detections are processed in descending confidence (ties keep input
    order); each one takes the unmatched ground truth of highest IoU and is
    a TP iff that IoU exceeds the threshold — strictly by default
    (``strict=False`` switches to >=, the convention of most tooling).
    When ``exclude_difficult`` is set, difficult ground truths count for
    nothing: they are not matchable, and detections that would hit them are
    excluded rather than labelled FP.
    """
    if not (0.0 < threshold < 1.0):
        raise ParameterError(f"IoU threshold must lie in (0, 1), got {threshold}")
    n = len(detections)
    tp = np.zeros(n, dtype=bool)
    excluded = np.zeros(n, dtype=bool)
    n_unknown_dets = 0
    n_unknown_gts = 0

    gt_index: dict[tuple[str, str], list[int]] = {}
    for j, gt in enumerate(ground_truths):
        if classes is not None and gt.class_name not in classes:
            n_unknown_gts += 1
            continue
        gt_index.setdefault((gt.image_id, gt.class_name), []).append(j)
    matched = np.zeros(len(ground_truths), dtype=bool)

    order = sorted(range(n), key=lambda i: -detections[i].confidence)
    for i in order:
        det = detections[i]
        if classes is not None and det.class_name not in classes:
            excluded[i] = True
            n_unknown_dets += 1
            continue
        candidates = gt_index.get((det.image_id, det.class_name), ())
        best_j = -1
        best_iou = -1.0
        for j in candidates:
            if matched[j] or (exclude_difficult and ground_truths[j].difficult):
                continue
            v = iou(det.box, ground_truths[j].box)
            if v > best_iou:
                best_iou = v
                best_j = j
        hit = best_iou > threshold if strict else best_iou >= threshold
        if best_j >= 0 and hit:
            tp[i] = True
            matched[best_j] = True
            continue
        if exclude_difficult:
            ignored = any(
                ground_truths[j].difficult
                and (iou(det.box, ground_truths[j].box) > threshold
                     if strict else iou(det.box, ground_truths[j].box) >= threshold)
                for j in candidates
            )
            if ignored:
                excluded[i] = True
    return MatchResult(tp, excluded, n_unknown_dets, n_unknown_gts)


def average_precision(
    labels: Sequence[bool], n_gt: int, interpolation: str = "all_point"
) -> float:
    """AP from confidence-ranked TP/FP labels.

    ``all_point``: area under the precision-recall step curve after taking
    the running maximum of precision from high recall toward low.
    ``eleven_point``: mean of interpolated precision at recall 0, 0.1, ... 1.
    """
    if n_gt < 1:
        raise ParameterError("average precision needs at least one ground truth")
    if interpolation not in ("all_point", "eleven_point"):
        raise ParameterError(f"unknown interpolation {interpolation!r}")
    labels_arr = np.asarray(labels, dtype=bool)
    if labels_arr.size == 0:
        return 0.0
    tp_cum = np.cumsum(labels_arr)
    precision = tp_cum / np.arange(1, labels_arr.size + 1)
    recall = tp_cum / n_gt
    interp = np.maximum.accumulate(precision[::-1])[::-1]
    if interpolation == "eleven_point":
        total = 0.0
        for r in np.linspace(0.0, 1.0, 11):
            mask = recall >= r
            total += interp[mask][0] if mask.any() else 0.0
        return total / 11.0
    prev = np.concatenate(([0.0], recall[:-1]))
    return float(np.sum((recall - prev) * interp))


def pr_curve(labels: Sequence[bool], n_gt: int) -> tuple[np.ndarray, np.ndarray]:
    """(recall, precision) points of the raw ranking curve."""
    labels_arr = np.asarray(labels, dtype=bool)
    if labels_arr.size == 0:
        return np.zeros(0), np.zeros(0)
    tp_cum = np.cumsum(labels_arr)
    return tp_cum / n_gt, tp_cum / np.arange(1, labels_arr.size + 1)


@dataclass
class ClassResult:
    ap: float | None  # None when the class has no ground truth
    n_gt: int
    n_tp: int
    n_fp: int
    recall: np.ndarray
    precision: np.ndarray


@dataclass
class EvalReport:
    per_class: dict[str, ClassResult]
    map_value: float
    iou_threshold: float
    n_unknown_detections: int = 0
    n_unknown_ground_truths: int = 0

    def to_csv(self) -> str:
        lines = ["class,ap,n_gt,n_tp,n_fp"]
        for name, r in self.per_class.items():
            ap = f"{r.ap:.6f}" if r.ap is not None else ""
            lines.append(f"{name},{ap},{r.n_gt},{r.n_tp},{r.n_fp}")
        lines.append(f"mAP,{self.map_value:.6f},,,")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        name_w = max(len("class"), *(len(n) for n in self.per_class)) if self.per_class else 5
        header = f"{'class':<{name_w}}  {'AP':>8}  {'n_gt':>6}  {'n_tp':>6}  {'n_fp':>6}"
        rows = [header, "-" * len(header)]
        for name, r in self.per_class.items():
            ap = f"{r.ap:8.4f}" if r.ap is not None else f"{'n/a':>8}"
            rows.append(f"{name:<{name_w}}  {ap}  {r.n_gt:>6}  {r.n_tp:>6}  {r.n_fp:>6}")
        rows.append("-" * len(header))
        rows.append(f"{'mAP':<{name_w}}  {self.map_value:8.4f}")
        return "\n".join(rows) + "\n"


def evaluate(
    detections: Sequence[Detection],
    ground_truths: Sequence[GroundTruth],
    threshold: float = 0.5,
    classes: Sequence[str] = DOTA_CLASSES,
    strict: bool = True,
    interpolation: str = "all_point",
    exclude_difficult: bool = False,
) -> EvalReport:
    """Score detections against ground truth and tabulate AP per class.

    Classes follow the given order in the report; a class without ground
    truth gets AP = n/a and is left out of the mAP mean.
    """
    res = match_detections(
        detections, ground_truths, threshold, classes, strict, exclude_difficult
    )
    per_class: dict[str, ClassResult] = {}
    aps = []
    for cls in classes:
        ranked = sorted(
            (i for i, d in enumerate(detections) if d.class_name == cls),
            key=lambda i: -detections[i].confidence,
        )
        labels = [bool(res.tp[i]) for i in ranked if not res.excluded[i]]
        n_gt = sum(
            1
            for g in ground_truths
            if g.class_name == cls and not (exclude_difficult and g.difficult)
        )
        n_tp = sum(labels)
        n_fp = len(labels) - n_tp
        if n_gt >= 1:
            ap = average_precision(labels, n_gt, interpolation)
            recall, precision = pr_curve(labels, n_gt)
            aps.append(ap)
        else:
            ap, recall, precision = None, np.zeros(0), np.zeros(0)
        per_class[cls] = ClassResult(ap, n_gt, n_tp, n_fp, recall, precision)
    map_value = float(np.mean(aps)) if aps else 0.0
    return EvalReport(
        per_class,
        map_value,
        threshold,
        res.n_unknown_detections,
        res.n_unknown_ground_truths,
    )


def parse_detections(text: str) -> list[Detection]:
    """Parse detection lines: ``image_id class_name confidence x_min y_min
    x_max y_max``."""
    out = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 7:
            raise AnnotationParseError(line_no, f"expected 7 tokens, got {len(tokens)}")
        try:
            conf = float(tokens[2])
            coords = [float(t) for t in tokens[3:]]
        except ValueError:
            raise AnnotationParseError(line_no, "non-numeric confidence or coordinate")
        try:
            out.append(Detection(tokens[0], tokens[1], Box(*coords), conf))
        except ParameterError as exc:
            raise AnnotationParseError(line_no, str(exc))
    return out


def envelope_box(record: AnnotationRecord) -> Box:
    """Axis-aligned envelope of an annotation polygon."""
    xs = record.polygon[:, 0]
    ys = record.polygon[:, 1]
    return Box(float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max()))


def load_ground_truth(
    annotations_dir: str | Path, classes: Sequence[str] | None = DOTA_CLASSES
) -> list[GroundTruth]:
    """Read every ``*.txt`` annotation file in a directory; the file stem is
    the image id and polygons become envelope boxes."""
    out: list[GroundTruth] = []
    for path in sorted(Path(annotations_dir).glob("*.txt")):
        for rec in read_annotation_file(path, classes):
            out.append(
                GroundTruth(path.stem, rec.class_name, envelope_box(rec), rec.difficulty != 0)
            )
    return out
