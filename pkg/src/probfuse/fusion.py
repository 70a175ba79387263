"""Fused multi-channel inputs: RGB plus named probability channels.

The on-disk ``.fus`` format is little-endian throughout:

========  =====================================================
offset    field
========  =====================================================
0         magic ``FUSE`` (4 bytes)
4         format version, u16 (currently 1)
6         channel count C, u32
10        height, u32
14        width, u32
18        name table: C entries of (u16 byte length + UTF-8 name)
...       payload: C*H*W IEEE-754 float32, planar, row-major
end-4     CRC-32 (IEEE polynomial) of everything before it, u32
========  =====================================================
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .errors import FusedFormatError, ParameterError, ShapeError
from .mask_io import DOTA_CLASSES
from .probability_maps import ProbabilityMap

MAGIC = b"FUSE"
FORMAT_VERSION = 1

RGB_NAMES = ("R", "G", "B")

# Default indirect context: which context classes feed which target classes.
INDIRECT_ENTRIES = (
    ("harbor", ("ship",)),
    ("bridge", ("small-vehicle", "large-vehicle")),
    ("roundabout", ("small-vehicle", "large-vehicle")),
)


@dataclass
class ContextMapping:
    """Which context-class channels get concatenated after RGB.

    ``entries`` pairs each context class with the target classes it is meant
    to support; ``channel_order`` fixes the channel layout of every fused
    tensor built under this mapping.
    """

    mode: str  # "direct" | "indirect" | "single"
    entries: tuple[tuple[str, tuple[str, ...]], ...]
    channel_order: tuple[str, ...]

    def __post_init__(self):
        self.channel_order = tuple(self.channel_order)
        self.entries = tuple((c, tuple(t)) for c, t in self.entries)
        if self.mode not in ("direct", "indirect", "single"):
            raise ParameterError(f"unknown mapping mode {self.mode!r}")
        if len(set(self.channel_order)) != len(self.channel_order):
            raise ParameterError("channel_order has duplicate classes")
        if self.mode == "single" and len(self.channel_order) != 1:
            raise ParameterError("single mode carries exactly one context class")

    @classmethod
    def direct(cls, classes: Sequence[str] = DOTA_CLASSES) -> "ContextMapping":
        """One channel per class, each supporting itself."""
        return cls("direct", tuple((c, (c,)) for c in classes), tuple(classes))

    @classmethod
    def indirect(cls, entries=INDIRECT_ENTRIES) -> "ContextMapping":
        return cls("indirect", tuple(entries), tuple(c for c, _ in entries))

    @classmethod
    def single(cls, context_class: str) -> "ContextMapping":
        return cls("single", ((context_class, (context_class,)),), (context_class,))

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "entries": [[c, list(t)] for c, t in self.entries],
            "channel_order": list(self.channel_order),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ContextMapping":
        return cls(
            obj["mode"],
            tuple((c, tuple(t)) for c, t in obj["entries"]),
            tuple(obj["channel_order"]),
        )


@dataclass
class FusedTensor:
    """C x H x W planar float32 stack; channels 0-2 are RGB scaled to [0,1]."""

    channel_names: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self):
        self.channel_names = tuple(self.channel_names)
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise ShapeError("fused tensor must be C x H x W")
        if len(self.channel_names) != self.data.shape[0]:
            raise ShapeError(
                f"{len(self.channel_names)} channel names for {self.data.shape[0]} channels"
            )
        if self.channel_names[:3] != RGB_NAMES:
            raise ParameterError("first three channels must be R, G, B")
        if len(set(self.channel_names)) != len(self.channel_names):
            raise ParameterError("channel names must be unique")
        if not np.isfinite(self.data).all() or (self.data < 0).any() or (self.data > 1).any():
            raise ParameterError("fused values must lie in [0, 1]")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


def read_rgb(path: str | Path) -> np.ndarray:
    """Load an image as H x W x 3 uint8 (grayscale inputs are replicated)."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return arr


def build_fused(
    image: np.ndarray,
    maps: Sequence[tuple[str, ProbabilityMap]],
    mapping: ContextMapping,
) -> FusedTensor:
    """Concatenate RGB (bytes / 255) with probability channels in
    ``mapping.channel_order``.

    A context class with no map for this image contributes an all-zero
    channel; the channel arity is fixed by the mapping, never by the inputs.
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"expected H x W x 3 RGB image, got shape {image.shape}")
    h, w = image.shape[:2]
    by_class: dict[str, ProbabilityMap] = {}
    for name, pmap in maps:
        if name in by_class:
            raise ParameterError(f"duplicate probability map for class {name!r}")
        if (pmap.height, pmap.width) != (h, w):
            raise ShapeError(
                f"map for {name!r} is {pmap.height}x{pmap.width}, image is {h}x{w}"
            )
        by_class[name] = pmap

    planes = [image[:, :, k].astype(np.float32) / np.float32(255.0) for k in range(3)]
    for name in mapping.channel_order:
        pmap = by_class.get(name)
        planes.append(pmap.values if pmap is not None else np.zeros((h, w), np.float32))
    return FusedTensor(RGB_NAMES + mapping.channel_order, np.stack(planes, axis=0))


def _encode(tensor: FusedTensor) -> bytes:
    parts = [
        MAGIC,
        struct.pack(
            "<HIII", FORMAT_VERSION, tensor.channels, tensor.height, tensor.width
        ),
    ]
    for name in tensor.channel_names:
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw)
    parts.append(tensor.data.astype("<f4").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def write_fused(tensor: FusedTensor, path: str | Path) -> None:
    Path(path).write_bytes(_encode(tensor))


def read_fused(path: str | Path) -> FusedTensor:
    """Parse and CRC-check a ``.fus`` file; the result is bit-identical to
    what the writer was given."""
    blob = Path(path).read_bytes()
    if len(blob) < 22:
        raise FusedFormatError(f"{path}: truncated file ({len(blob)} bytes)", len(blob))
    if blob[:4] != MAGIC:
        raise FusedFormatError(f"{path}: bad magic {blob[:4]!r}", 0)
    version, channels, height, width = struct.unpack_from("<HIII", blob, 4)
    if version != FORMAT_VERSION:
        raise FusedFormatError(f"{path}: unsupported format version {version}", 4)

    # Checksum before interpreting anything past the identification header,
    # so corrupted interior bytes can never steer the parse.
    (crc_stored,) = struct.unpack_from("<I", blob, len(blob) - 4)
    crc_actual = zlib.crc32(blob[:-4])
    if crc_stored != crc_actual:
        raise FusedFormatError(
            f"{path}: CRC mismatch (stored {crc_stored:#010x}, computed {crc_actual:#010x})",
            len(blob) - 4,
        )

    names = []
    pos = 18
    for _ in range(channels):
        if pos + 2 > len(blob):
            raise FusedFormatError(f"{path}: truncated channel name table", pos)
        (n,) = struct.unpack_from("<H", blob, pos)
        pos += 2
        if pos + n > len(blob):
            raise FusedFormatError(f"{path}: truncated channel name", pos)
        try:
            names.append(blob[pos : pos + n].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FusedFormatError(f"{path}: channel name is not UTF-8: {exc}", pos) from exc
        pos += n

    payload_len = channels * height * width * 4
    expected = pos + payload_len + 4
    if len(blob) != expected:
        raise FusedFormatError(
            f"{path}: file is {len(blob)} bytes, header implies {expected}", pos
        )
    data = (
        np.frombuffer(blob, dtype="<f4", count=channels * height * width, offset=pos)
        .reshape(channels, height, width)
        .copy()
    )
    try:
        return FusedTensor(tuple(names), data)
    except (ParameterError, ShapeError) as exc:
        raise FusedFormatError(f"{path}: invalid tensor content: {exc}", pos) from exc
