"""Line iteration shared by the JSON Lines readers."""

from collections.abc import Iterator
from pathlib import Path

from trackmine.errors import FormatError


def iter_lines(path: Path) -> Iterator[tuple[int, str]]:
    """Yield ``(line_no, text)`` for every non-blank line, 1-based.

    Lines are decoded one at a time so a bad byte is reported with its line.
    """
    with open(path, "rb") as f:
        for line_no, raw in enumerate(f, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise FormatError(f"Invalid UTF-8 at byte {e.start}: {e.reason}", path, line_no) from None
            if line.strip():
                yield line_no, line
