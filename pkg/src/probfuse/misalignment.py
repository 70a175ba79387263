"""Seeded random translations that simulate misaligned context sensors.

The shift magnitude is drawn uniformly between two fractions of the image
width (default 5-10%), the direction uniformly over the circle.  Every
(master_seed, image_id) pair derives its own RNG stream, so shifts are
reproducible regardless of processing order.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .mask_io import BinaryMask

_MAX_DRAWS = 1000


@dataclass(frozen=True)
class ShiftSpec:
    """Integer translation in pixels; positive dx is rightward, dy downward."""

    dx: int
    dy: int


@dataclass(frozen=True)
class ShiftPolicy:
    min_frac: float = 0.05
    max_frac: float = 0.10
    master_seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.min_frac <= self.max_frac <= 1.0):
            raise ParameterError(
                f"need 0 <= min_frac <= max_frac <= 1, got ({self.min_frac}, {self.max_frac})"
            )


def apply_shift(mask: BinaryMask, spec: ShiftSpec) -> BinaryMask:
    """Translate a mask by (dx, dy), zero-filling cells shifted in from
    outside the frame.  Dimensions are unchanged."""
    h, w = mask.data.shape
    if abs(spec.dx) > w or abs(spec.dy) > h:
        raise ParameterError(f"shift {spec} exceeds raster dimensions {w}x{h}")
    out = np.zeros_like(mask.data)
    ys0 = max(0, -spec.dy)
    ys1 = min(h, h - spec.dy)
    xs0 = max(0, -spec.dx)
    xs1 = min(w, w - spec.dx)
    if ys0 < ys1 and xs0 < xs1:
        out[ys0 + spec.dy : ys1 + spec.dy, xs0 + spec.dx : xs1 + spec.dx] = mask.data[
            ys0:ys1, xs0:xs1
        ]
    return BinaryMask(out, mask.class_name)


def _stream(master_seed: int, image_id: str) -> np.random.Generator:
    key = hashlib.blake2b(
        (master_seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little") + b"/" + image_id.encode("utf-8"),
        digest_size=8,
    ).digest()
    return np.random.default_rng(int.from_bytes(key, "little"))


def sample_shift(policy: ShiftPolicy, image_id: str, width: int, height: int) -> ShiftSpec:
    """Draw the reproducible shift for one image.

    Magnitude r = u*width with u uniform in [min_frac, max_frac], direction
    uniform in [0, 2*pi); dx, dy are the rounded components.  Draws whose
    rounded magnitude falls outside [min_frac*width - 0.5,
    max_frac*width + 0.5], or out of the raster bounds, are redrawn from the
    same stream, so the magnitude law holds for every emitted spec.
    """
    if width < 1:
        raise ParameterError(f"width must be >= 1, got {width}")
    rng = _stream(policy.master_seed, image_id)
    lo = policy.min_frac * width - 0.5
    hi = policy.max_frac * width + 0.5
    for _ in range(_MAX_DRAWS):
        r = rng.uniform(policy.min_frac, policy.max_frac) * width
        theta = rng.uniform(0.0, 2.0 * math.pi)
        dx = round(r * math.cos(theta))
        dy = round(r * math.sin(theta))
        if lo <= math.hypot(dx, dy) <= hi and abs(dx) <= width and abs(dy) <= height:
            return ShiftSpec(dx, dy)
    raise ParameterError(
        f"no feasible shift for image {image_id!r} with policy {policy} on {width}x{height}"
    )
