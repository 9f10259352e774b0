"""JSON Lines detection files: one segment per record, record index = segment id."""

import json
import logging
from pathlib import Path

from pydantic import ValidationError

from trackmine.errors import FormatError
from trackmine.io.atomic import atomic_write_text
from trackmine.io.lines import iter_lines
from trackmine.io.models import DetectionRecord, SequenceBundle
from trackmine.tracking.models import Segment

logger = logging.getLogger(__name__)


def _describe(e: ValidationError) -> str:
    """First validation error as ``field: message``."""
    err = e.errors()[0]
    loc = ".".join(str(part) for part in err["loc"])
    msg = err["msg"]
    return f"{loc}: {msg}" if loc else msg


def parse_detections(path: Path) -> list[Segment]:
    """Parse every record of a detections file into segments.

    Blank lines are skipped; record indices count non-blank lines only.
    """
    segments: list[Segment] = []
    frame_size: tuple[int, int] | None = None
    for line_no, line in iter_lines(path):
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"Invalid JSON: {e.msg}", path, line_no) from None
        if not isinstance(raw, dict):
            raise FormatError("Record must be a JSON object", path, line_no)
        try:
            seg = DetectionRecord.model_validate(raw).to_segment(len(segments))
        except ValidationError as e:
            raise FormatError(_describe(e), path, line_no) from None
        if frame_size is None:
            frame_size = seg.mask.size
        elif seg.mask.size != frame_size:
            raise FormatError(
                f"Mask size {list(seg.mask.size)} differs from earlier records {list(frame_size)}",
                path,
                line_no,
            )
        segments.append(seg)
    return segments


def bundle_from_segments(
    segments: list[Segment],
    name: str,
    frame_size: tuple[int, int] | None = None,
    num_frames: int | None = None,
) -> SequenceBundle:
    """Group segments by frame; ``num_frames`` pads trailing empty frames."""
    n = max((s.frame for s in segments), default=-1) + 1
    if num_frames is not None:
        if num_frames < n:
            raise ValueError(f"Detections reach frame {n - 1} but the sequence has {num_frames} frames")
        n = num_frames
    frames: list[list[Segment]] = [[] for _ in range(n)]
    for seg in segments:
        frames[seg.frame].append(seg)
    if frame_size is None:
        frame_size = segments[0].mask.size if segments else (0, 0)
    return SequenceBundle(name=name, frame_size=frame_size, frames=frames)


def load_detections(path: Path, name: str | None = None) -> SequenceBundle:
    """Load a detections file into a bundle without flows.

    An empty file yields a bundle with zero frames.

    Raises:
        FormatError: on malformed JSON or records violating a type invariant,
            with the offending line number.
    """
    path = Path(path)
    segments = parse_detections(path)
    bundle = bundle_from_segments(segments, name or path.stem)
    logger.info(f"Loaded {bundle.num_segments} detections over {bundle.num_frames} frames from {path}")
    return bundle


def write_detections(bundle: SequenceBundle, path: Path) -> None:
    """Write the bundle's segments in id order, one record per line."""
    lines = [
        json.dumps(DetectionRecord.from_segment(seg).to_json_dict())
        for seg in bundle.segments
    ]
    atomic_write_text(Path(path), "".join(f"{line}\n" for line in lines))
    logger.info(f"Wrote {len(lines)} detections to {path}")
