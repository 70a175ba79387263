"""Exact Euclidean distance to the nearest set cell of a binary mask.

Distances are measured between cell centers on the integer grid, held as
exact integer squared distances internally, and exposed as true Euclidean
distances (one square root at the boundary).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EmptyMaskError
from .mask_io import BinaryMask


@dataclass
class DistanceField:
    """Per-cell distance raster; ``squared`` is exact in int64."""

    squared: np.ndarray

    @property
    def height(self) -> int:
        return self.squared.shape[0]

    @property
    def width(self) -> int:
        return self.squared.shape[1]

    @property
    def values(self) -> np.ndarray:
        """True Euclidean distances, float64."""
        return np.sqrt(self.squared.astype(np.float64))


def edt(mask: BinaryMask) -> DistanceField:
    """Exact Euclidean distance transform in linear time.

    Raises EmptyMaskError on an all-zero mask: the distance field (and the
    normalization built on it) is undefined there, so the caller must choose
    a policy.
    """
    if not mask.data.any():
        raise EmptyMaskError("distance transform of an all-zero mask is undefined")
    return DistanceField(_kernels.edt_sq(mask.data))


def edt_bruteforce(mask: BinaryMask) -> DistanceField:
    """Literal min-over-all-set-cells evaluation; the oracle for edt.

    O(H*W*|mask|) — intended for small rasters only.
    """
    if not mask.data.any():
        raise EmptyMaskError("distance transform of an all-zero mask is undefined")
    ys, xs = np.nonzero(mask.data)
    ii, jj = np.meshgrid(
        np.arange(mask.height, dtype=np.int64),
        np.arange(mask.width, dtype=np.int64),
        indexing="ij",
    )
    d2 = (ii[:, :, None] - ys) ** 2 + (jj[:, :, None] - xs) ** 2
    return DistanceField(d2.min(axis=2))
