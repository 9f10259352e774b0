"""Exception types raised by trackmine.

Everything derives from ValueError, so ``except ValueError`` at a call site
catches all input-validation failures. The CLI maps these to exit code 1.
"""

from pathlib import Path


class TrackmineError(ValueError):
    """Base class for trackmine validation errors."""


class DimensionMismatchError(TrackmineError):
    """Two rasters (masks, flows, feature maps) disagree in shape."""


class DegenerateInputError(TrackmineError):
    """Input makes a quantity undefined (empty pooling mask, zero ground truth)."""


class FrameOrderError(TrackmineError):
    """Segments or flows are inconsistent with the frame being processed."""


class OverlapError(TrackmineError):
    """Masks on one side of an evaluation overlap each other."""


class SizeLimitError(TrackmineError):
    """Input is too large for an exhaustive routine."""


class MissingEmbeddingError(TrackmineError):
    """An embedding is required by the payoff but the segment has none."""


class FormatError(TrackmineError):
    """A file does not follow its declared format.

    The message is prefixed with ``path:line`` when a position is known.
    """

    def __init__(self, message: str, path: Path | str | None = None, line: int | None = None):
        self.path = Path(path) if path is not None else None
        self.line = line
        self.reason = message
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")
