"""Annotation parsing, polygon rasterization, and mask image I/O.

Annotations follow the DOTA ground-truth text format: optional header
lines (``imagesource:...``, ``gsd:...``) followed by one object per line,
``x1 y1 x2 y2 x3 y3 x4 y4 class_name difficulty``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from .errors import AnnotationParseError, MaskFormatError, ParameterError

# Class universe, in the order used by the evaluation tables.
DOTA_CLASSES = (
    "plane",
    "ship",
    "storage-tank",
    "baseball-diamond",
    "tennis-court",
    "basketball-court",
    "ground-track-field",
    "harbor",
    "bridge",
    "large-vehicle",
    "small-vehicle",
    "helicopter",
    "roundabout",
    "soccer-ball-field",
    "swimming-pool",
)

_HEADER_PREFIXES = ("imagesource", "gsd")


@dataclass
class BinaryMask:
    """Single-channel {0,1} raster for one context class.

    ``data`` is an H x W uint8 array in row-major order; cell (i, j) sits at
    integer grid coordinates (row i, column j).
    """

    data: np.ndarray
    class_name: str = ""

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.uint8)
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ParameterError("mask must be a 2-D raster with positive dimensions")
        if not np.isin(self.data, (0, 1)).all():
            raise ParameterError("mask cells must be exactly 0 or 1")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def count(self) -> int:
        """Number of set cells."""
        return int(self.data.sum())


@dataclass
class AnnotationRecord:
    """One annotated object: a 4-corner polygon with class and difficulty."""

    class_name: str
    polygon: np.ndarray  # (4, 2) float64, (x, y) pixel coordinates
    difficulty: int = 0

    def __post_init__(self):
        self.polygon = np.asarray(self.polygon, dtype=np.float64).reshape(4, 2)
        if not np.isfinite(self.polygon).all() or (self.polygon < 0).any():
            raise ParameterError("polygon coordinates must be finite and >= 0")


def parse_annotations(
    file_contents: str, classes: Sequence[str] | None = DOTA_CLASSES
) -> list[AnnotationRecord]:
    """Parse DOTA-style annotation text into records, preserving file order.

    Header lines starting with ``imagesource`` or ``gsd`` and blank lines are
    skipped.  Every other line must carry 8 numeric coordinates, a class name,
    and an integer difficulty flag.  Pass ``classes=None`` to accept any class
    name; otherwise unknown names are rejected.

    Raises AnnotationParseError naming the 1-based line number on the first
    malformed line.
    """
    records: list[AnnotationRecord] = []
    for line_no, raw in enumerate(file_contents.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.lower().startswith(_HEADER_PREFIXES):
            continue
        tokens = line.split()
        if len(tokens) != 10:
            raise AnnotationParseError(
                line_no, f"expected 10 tokens (8 coordinates, class, difficulty), got {len(tokens)}"
            )
        try:
            coords = [float(t) for t in tokens[:8]]
        except ValueError:
            raise AnnotationParseError(line_no, f"non-numeric coordinate in {tokens[:8]}")
        if not all(math.isfinite(c) for c in coords):
            raise AnnotationParseError(line_no, "non-finite coordinate")
        if any(c < 0 for c in coords):
            raise AnnotationParseError(line_no, "negative coordinate")
        class_name = tokens[8]
        if classes is not None and class_name not in classes:
            raise AnnotationParseError(line_no, f"unknown class {class_name!r}")
        try:
            difficulty = int(tokens[9])
        except ValueError:
            raise AnnotationParseError(line_no, f"non-integer difficulty {tokens[9]!r}")
        polygon = np.array(coords, dtype=np.float64).reshape(4, 2)
        records.append(AnnotationRecord(class_name, polygon, difficulty))
    return records


def read_annotation_file(path: str | Path, classes: Sequence[str] | None = DOTA_CLASSES):
    return parse_annotations(Path(path).read_text(encoding="utf-8"), classes)


def _edge_crossings(xq: np.ndarray, yq: np.ndarray, a, b) -> np.ndarray:
    # Even-odd ray crossing toward +x, multiplication form (no division so the
    # test stays exact for small-integer coordinates).
    ax, ay = a
    bx, by = b
    straddles = (ay > yq) != (by > yq)
    s = by - ay
    lhs = (xq - ax) * s
    rhs = (yq - ay) * (bx - ax)
    return straddles & (((s > 0) & (lhs < rhs)) | ((s < 0) & (lhs > rhs)))


def _on_edge(xq: np.ndarray, yq: np.ndarray, a, b) -> np.ndarray:
    ax, ay = a
    bx, by = b
    cross = (bx - ax) * (yq - ay) - (by - ay) * (xq - ax)
    dot = (xq - ax) * (xq - bx) + (yq - ay) * (yq - by)
    return (cross == 0.0) & (dot <= 0.0)


def rasterize(
    records: Iterable[AnnotationRecord], class_name: str, width: int, height: int
) -> BinaryMask:
    """Rasterize all polygons of one class onto a width x height grid.

    A cell is set iff its center — the integer point (x=j, y=i) — lies inside
    at least one polygon under the even-odd rule, with points on a polygon
    boundary counting as inside.  Classes absent from ``records`` yield an
    all-zero mask.
    """
    if width < 1 or height < 1:
        raise ParameterError("width and height must be >= 1")
    out = np.zeros((height, width), dtype=np.uint8)
    for rec in records:
        if rec.class_name != class_name:
            continue
        poly = rec.polygon
        x0 = max(int(math.ceil(poly[:, 0].min())), 0)
        x1 = min(int(math.floor(poly[:, 0].max())), width - 1)
        y0 = max(int(math.ceil(poly[:, 1].min())), 0)
        y1 = min(int(math.floor(poly[:, 1].max())), height - 1)
        if x0 > x1 or y0 > y1:
            continue
        yq, xq = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
        xq = xq.astype(np.float64)
        yq = yq.astype(np.float64)
        crossings = np.zeros(xq.shape, dtype=np.int64)
        boundary = np.zeros(xq.shape, dtype=bool)
        for k in range(4):
            a = poly[k]
            b = poly[(k + 1) % 4]
            crossings += _edge_crossings(xq, yq, a, b)
            boundary |= _on_edge(xq, yq, a, b)
        inside = (crossings % 2 == 1) | boundary
        out[y0 : y1 + 1, x0 : x1 + 1] |= inside.astype(np.uint8)
    return BinaryMask(out, class_name)


def read_mask(path: str | Path, class_name: str = "") -> BinaryMask:
    """Read a mask from a single-channel 8-bit grayscale PNG.

    Pixel values >= 128 map to 1, everything below to 0 (tolerates
    anti-aliased third-party masks).  Multi-channel or 16-bit input is
    rejected.
    """
    with Image.open(path) as img:
        if img.mode != "L":
            raise MaskFormatError(
                f"{path}: unsupported image mode {img.mode!r}; need single-channel 8-bit grayscale"
            )
        arr = np.asarray(img, dtype=np.uint8)
    return BinaryMask((arr >= 128).astype(np.uint8), class_name)


def write_mask(mask: BinaryMask, path: str | Path) -> None:
    """Write a mask as an 8-bit grayscale PNG with values {0, 255}."""
    Image.fromarray(mask.data * np.uint8(255), mode="L").save(path, format="PNG")
