"""Shared test utilities: slow-but-obvious oracle implementations and
synthetic data generators.  Oracles are written in the most literal way
possible — their job is to be independently convincing, not fast."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image

from probfuse import BinaryMask

# --- generators -------------------------------------------------------------


def random_mask(rng: np.random.Generator, h: int, w: int, density: float) -> BinaryMask:
    """Random mask with at least one set cell."""
    data = (rng.random((h, w)) < density).astype(np.uint8)
    if data.sum() == 0:
        data[rng.integers(h), rng.integers(w)] = 1
    return BinaryMask(data, "ship")


def random_polygon(rng: np.random.Generator, w: int, h: int) -> np.ndarray:
    """Random non-degenerate quadrilateral inside [0, w] x [0, h]."""
    while True:
        pts = np.stack([rng.uniform(0, w, 4), rng.uniform(0, h, 4)], axis=1)
        # sort by angle around the centroid so self-intersections are rare
        c = pts.mean(axis=0)
        order = np.argsort(np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0]))
        pts = pts[order]
        area2 = 0.0
        for k in range(4):
            x0, y0 = pts[k]
            x1, y1 = pts[(k + 1) % 4]
            area2 += x0 * y1 - x1 * y0
        if abs(area2) > 1.0:
            return pts


# --- scalar oracles ----------------------------------------------------------


def point_in_polygon(x: float, y: float, poly: np.ndarray) -> bool:
    """Even-odd rule in the classic division form, boundary-inclusive."""
    n = len(poly)
    # boundary check: point on any edge counts as inside
    for k in range(n):
        x0, y0 = poly[k]
        x1, y1 = poly[(k + 1) % n]
        cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)
        dot = (x - x0) * (x - x1) + (y - y0) * (y - y1)
        if cross == 0.0 and dot <= 0.0:
            return True
    inside = False
    for k in range(n):
        x0, y0 = poly[k]
        x1, y1 = poly[(k + 1) % n]
        if (y0 > y) != (y1 > y):
            x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if x < x_cross:
                inside = not inside
    return inside


def edt_scalar(mask: np.ndarray) -> np.ndarray:
    """Literal nearest-set-cell squared distances, O(n^2) over cell pairs."""
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    out = np.empty((h, w), dtype=np.int64)
    for i in range(h):
        for j in range(w):
            best = None
            for y, x in zip(ys, xs):
                d = (int(i) - int(y)) ** 2 + (int(j) - int(x)) ** 2
                if best is None or d < best:
                    best = d
            out[i, j] = best
    return out


def eq2_scalar(mask: np.ndarray, alpha: float, radius: int) -> np.ndarray:
    """Direct per-cell evaluation of the neighborhood-weighted map."""
    h, w = mask.shape
    cells = list(zip(*np.nonzero(mask)))
    out = np.zeros((h, w), dtype=np.float64)
    for i in range(h):
        for j in range(w):
            num = 0.0
            den = 0.0
            for y, x in cells:
                weight = math.exp(-alpha * math.hypot(i - y, j - x))
                den += weight
                if max(abs(i - y), abs(j - x)) <= radius:
                    num += weight
            out[i, j] = num / den if num > 0.0 else 0.0
    return out


def ap_oracle(labels, n_gt: int) -> float:
    """All-point interpolated AP by the definition: sum over recall steps of
    step width times the max precision at recall >= that level."""
    tp = 0
    points = []  # (recall, precision) after each detection
    for k, is_tp in enumerate(labels, start=1):
        tp += int(is_tp)
        points.append((tp / n_gt, tp / k))
    total = 0.0
    prev_r = 0.0
    for idx, (r, _) in enumerate(points):
        if r == prev_r:
            continue
        best = max(p for rr, p in points[idx:] if rr >= r)
        total += (r - prev_r) * best
        prev_r = r
    return total


# --- synthetic datasets -------------------------------------------------------


def _rect(x0: int, y0: int, dw: int, dh: int) -> str:
    return f"{x0} {y0} {x0 + dw} {y0} {x0 + dw} {y0 + dh} {x0} {y0 + dh}"


def make_mini_dataset(root: Path, n_images: int = 10, size: tuple[int, int] = (48, 64)) -> Path:
    """Deterministic small dataset: images/*.png + annotations/*.txt with
    harbor/bridge/roundabout/ship polygons."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "annotations").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(7_2024)
    h, w = size
    for i in range(n_images):
        img = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
        Image.fromarray(img, "RGB").save(root / "images" / f"P{i:04d}.png")
        lines = ["imagesource:synthetic", "gsd:0.5"]
        for cls, difficulty in (("harbor", 0), ("bridge", i % 2), ("roundabout", 0), ("ship", 0)):
            x0 = int(rng.integers(2, w - 14))
            y0 = int(rng.integers(2, h - 12))
            lines.append(f"{_rect(x0, y0, 12, 9)} {cls} {difficulty}")
        (root / "annotations" / f"P{i:04d}.txt").write_text(
            "\n".join(lines) + "\n", encoding="utf-8"
        )
    return root
