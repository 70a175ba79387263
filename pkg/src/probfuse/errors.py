"""Exception types shared across the toolkit."""


class ProbfuseError(Exception):
    """Base class for all errors raised by this package."""


class AnnotationParseError(ProbfuseError):
    """A malformed line in an annotation file."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class MaskFormatError(ProbfuseError):
    """Mask image file is not single-channel 8-bit grayscale."""


class EmptyMaskError(ProbfuseError):
    """Operation requires a mask with at least one set cell."""


class ParameterError(ProbfuseError, ValueError):
    """Invalid parameter value."""


class ShapeError(ProbfuseError, ValueError):
    """Raster dimensions do not agree."""


class FusedFormatError(ProbfuseError):
    """Corrupt or unsupported fused-tensor file."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


class ManifestError(ProbfuseError):
    """Manifest file is missing fields or references missing data."""
