"""Exceptions raised by the binary dataset and weights file readers.

Domain errors (bad arguments, shape mismatches between in-memory arrays)
use plain ``ValueError``; the classes here cover malformed *files* so
callers can tell apart the failure modes of on-disk data.
"""


class FileFormatError(Exception):
    """Base class for malformed dataset or weights files."""


class MagicError(FileFormatError):
    """File does not start with the expected magic bytes."""


class VersionError(FileFormatError):
    """File declares a format version this reader does not support."""


class TruncationError(FileFormatError):
    """File ended before the declared payload was complete."""


class InconsistencyError(FileFormatError):
    """File header and payload disagree (e.g. trailing bytes after the
    declared record count)."""


class ShapeError(FileFormatError):
    """A stored tensor's declared shape is incompatible with the model
    layout implied by the other tensors."""
