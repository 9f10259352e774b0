"""Track assignment files.

A header record ``{"format", "version", "sequence", "num_tracks"}`` is
followed by ``{"frame", "det_index", "track_id"}`` records sorted by
(frame, det_index).
"""

import json
import logging
from pathlib import Path

from pydantic import ValidationError

from trackmine.errors import FormatError
from trackmine.io.atomic import atomic_write_text
from trackmine.io.lines import iter_lines
from trackmine.io.models import (
    TRACKS_FORMAT,
    TRACKS_VERSION,
    SequenceBundle,
    TrackAssignment,
    TracksHeader,
)
from trackmine.tracking.models import Track

logger = logging.getLogger(__name__)


def track_assignments(bundle: SequenceBundle, tracks: list[Track]) -> list[TrackAssignment]:
    records = []
    for track in tracks:
        for sid, frame in zip(track.segments, track.frames, strict=True):
            if bundle.segment(sid).frame != frame:
                raise ValueError(f"Track {track.id} places segment {sid} in frame {frame}")
            records.append(TrackAssignment(frame=frame, det_index=sid, track_id=track.id))
    records.sort(key=lambda r: (r.frame, r.det_index))
    return records


def write_tracks(bundle: SequenceBundle, tracks: list[Track], path: Path) -> None:
    """Write tracks of ``bundle``; an empty track list yields the header only."""
    header = TracksHeader(sequence=bundle.name, num_tracks=len(tracks))
    lines = [header.model_dump_json()]
    lines.extend(r.model_dump_json() for r in track_assignments(bundle, tracks))
    atomic_write_text(Path(path), "".join(f"{line}\n" for line in lines))
    logger.info(f"Wrote {len(tracks)} tracks ({len(lines) - 1} assignments) to {path}")


def load_tracks(path: Path, bundle: SequenceBundle) -> list[Track]:
    """Read a tracks file back into Track objects over ``bundle``'s segments."""
    path = Path(path)
    header: TracksHeader | None = None
    members: dict[int, list[int]] = {}
    seen: set[int] = set()
    for line_no, line in iter_lines(path):
        try:
            raw = json.loads(line)
            if header is None:
                header = TracksHeader.model_validate(raw)
                if header.format != TRACKS_FORMAT or header.version != TRACKS_VERSION:
                    raise FormatError(
                        f"Unsupported tracks format {header.format!r} v{header.version}",
                        path,
                        line_no,
                    )
                continue
            rec = TrackAssignment.model_validate(raw)
        except json.JSONDecodeError as e:
            raise FormatError(f"Invalid JSON: {e.msg}", path, line_no) from None
        except ValidationError as e:
            raise FormatError(str(e.errors()[0]["msg"]), path, line_no) from None
        try:
            seg = bundle.segment(rec.det_index)
        except KeyError:
            raise FormatError(f"Unknown det_index {rec.det_index}", path, line_no) from None
        if seg.frame != rec.frame:
            raise FormatError(
                f"det_index {rec.det_index} belongs to frame {seg.frame}, not {rec.frame}",
                path,
                line_no,
            )
        if rec.det_index in seen:
            raise FormatError(f"det_index {rec.det_index} assigned twice", path, line_no)
        seen.add(rec.det_index)
        members.setdefault(rec.track_id, []).append(rec.det_index)

    if header is None:
        raise FormatError("Missing header record", path)
    if len(members) != header.num_tracks:
        raise FormatError(f"Header declares {header.num_tracks} tracks, found {len(members)}", path)

    tracks = []
    for track_id in sorted(members):
        segs = sorted((bundle.segment(sid) for sid in members[track_id]), key=lambda s: s.frame)
        try:
            tracks.append(
                Track(
                    id=track_id,
                    class_name=segs[0].class_name,
                    segments=[s.id for s in segs],
                    frames=[s.frame for s in segs],
                )
            )
        except ValidationError as e:
            raise FormatError(f"Track {track_id}: {e.errors()[0]['msg']}", path) from None
    return tracks
