"""Probability maps from binary context masks.

Two generation methods:

* ``eq1`` — normalized-distance map: P = 1 - d/max(d), where d is the exact
  Euclidean distance to the nearest mask cell.  P is 1 on mask cells and 0
  wherever the image-wide maximum distance is attained.
* ``eq2`` — neighborhood-weighted map: with M the set of mask cells and
  R(p) the mask cells within a Chebyshev radius of p,

      P(p) = sum_{r in R(p)} exp(-alpha*|r-p|) / sum_{m in M} exp(-alpha*|m-p|)

  (|.| Euclidean).  The numerator terms are a subset of the denominator
  terms, so P is in [0, 1]; P(p) = 0 exactly when no mask cell lies in the
  neighborhood, and P(p) = 1 exactly when the neighborhood holds all of M.

Maps are stored as float32 (what fused tensors carry); the ``*_field``
functions expose the float64 computation for oracle-grade comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import _kernels
from .distance_transform import edt
from .errors import EmptyMaskError, ParameterError
from .mask_io import BinaryMask

# Far-field kernel terms are cut once their total possible mass drops below
# this fraction of the smallest in-neighborhood weight; keeps the optimized
# map within ~1e-12 of the literal sum while bounding the stamp size.
_TRUNCATION_TOL = 1e-13


@dataclass
class Eq2Params:
    """User knobs for the neighborhood-weighted map."""

    alpha: float = 1.0
    radius: int = 1

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be a positive real, got {self.alpha}")
        if int(self.radius) != self.radius or self.radius < 1:
            raise ParameterError(f"radius must be a positive integer, got {self.radius}")
        self.radius = int(self.radius)


@dataclass
class ProbabilityMap:
    """H x W float32 raster of values in [0, 1]."""

    values: np.ndarray
    method: str  # "eq1" | "eq2"
    params: Eq2Params | None = None

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ParameterError("probability map must be 2-D")
        if self.method not in ("eq1", "eq2"):
            raise ParameterError(f"unknown map method {self.method!r}")
        if (
            not np.isfinite(self.values).all()
            or (self.values < 0).any()
            or (self.values > 1).any()
        ):
            raise ParameterError("probability values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def eq1_field(mask: BinaryMask) -> np.ndarray:
    """Normalized-distance map in float64.

    When the mask covers every cell, max(d) is 0 and the map is defined as
    all-ones (limit of a shrinking background).
    """
    field = edt(mask)  # raises EmptyMaskError on all-zero masks
    d = field.values
    dmax = d.max()
    if dmax == 0.0:
        return np.ones_like(d)
    return 1.0 - d / dmax


def prob_map_eq1(mask: BinaryMask) -> ProbabilityMap:
    return ProbabilityMap(eq1_field(mask), "eq1")


def _exp_patch(alpha: float, rad: int, hole: int, keep_inside: bool) -> np.ndarray:
    dy, dx = np.mgrid[-rad : rad + 1, -rad : rad + 1]
    k = np.exp(-alpha * np.hypot(dy, dx))
    cheb = np.maximum(np.abs(dy), np.abs(dx))
    if keep_inside:
        k[cheb > hole] = 0.0
    else:
        k[cheb <= hole] = 0.0
    return k


def eq2_field(mask: BinaryMask, params: Eq2Params) -> np.ndarray:
    """Neighborhood-weighted map in float64.

    Both sums are accumulated by stamping a precomputed kernel patch at every
    mask cell.  The numerator patch covers exactly the Chebyshev
    neighborhood; the denominator's far field is truncated where the
    remaining mass is provably negligible (on small rasters the cutoff
    exceeds the grid diagonal, so no truncation happens at all).
    """
    if not mask.data.any():
        raise EmptyMaskError("probability map of an all-zero mask is undefined")
    h, w = mask.data.shape
    ys, xs = np.nonzero(mask.data)
    ys = ys.astype(np.int64)
    xs = xs.astype(np.int64)

    rad = params.radius
    num = np.zeros((h, w), np.float64)
    _kernels.accumulate_patches(ys, xs, _exp_patch(params.alpha, rad, rad, True), rad, num)

    cutoff = rad * math.sqrt(2.0) + math.log(h * w / _TRUNCATION_TOL) / params.alpha
    diag = math.hypot(h - 1, w - 1)
    far_rad = int(math.ceil(min(cutoff, diag)))
    far = np.zeros((h, w), np.float64)
    if far_rad > 0:
        _kernels.accumulate_patches(
            ys, xs, _exp_patch(params.alpha, far_rad, rad, False), far_rad, far
        )

    den = num + far
    out = np.zeros((h, w), np.float64)
    hit = num > 0.0
    out[hit] = num[hit] / den[hit]
    return out


def prob_map_eq2(mask: BinaryMask, params: Eq2Params) -> ProbabilityMap:
    return ProbabilityMap(eq2_field(mask, params), "eq2", params)


def eq2_field_bruteforce(mask: BinaryMask, params: Eq2Params) -> np.ndarray:
    """Literal all-cells x all-mask-cells evaluation; the oracle for eq2.

    Builds the full pairwise distance table, O(H*W*|mask|) memory and time —
    small rasters only.
    """
    if not mask.data.any():
        raise EmptyMaskError("probability map of an all-zero mask is undefined")
    h, w = mask.data.shape
    ys, xs = np.nonzero(mask.data)
    ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    dy = ii[:, :, None] - ys
    dx = jj[:, :, None] - xs
    weights = np.exp(-params.alpha * np.hypot(dy, dx))
    in_window = np.maximum(np.abs(dy), np.abs(dx)) <= params.radius
    num = np.where(in_window, weights, 0.0).sum(axis=2)
    den = weights.sum(axis=2)
    out = np.zeros((h, w), np.float64)
    hit = num > 0.0
    out[hit] = num[hit] / den[hit]
    return out


def prob_map_eq2_bruteforce(mask: BinaryMask, params: Eq2Params) -> ProbabilityMap:
    return ProbabilityMap(eq2_field_bruteforce(mask, params), "eq2", params)


def write_map_png(pmap: ProbabilityMap, path: str | Path) -> None:
    """Export a map as 8-bit grayscale PNG, pixel = round(255 * P)."""
    arr = np.rint(pmap.values.astype(np.float64) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def read_map_png(
    path: str | Path, method: str = "eq1", params: Eq2Params | None = None
) -> ProbabilityMap:
    """Load a map previously exported with :func:`write_map_png`.

    PNG export quantizes to 8 bits, so the values come back as k/255 — use
    the fused binary format when full float32 precision matters.  The PNG
    carries no provenance, so the method label is whatever the caller says.
    """
    with Image.open(path) as img:
        if img.mode != "L":
            raise ParameterError(
                f"probability map PNG must be 8-bit grayscale, got mode {img.mode!r}"
            )
        arr = np.asarray(img, dtype=np.float32) / np.float32(255.0)
    return ProbabilityMap(arr, method, params)
