"""Pydantic models for on-disk records and in-memory sequence bundles."""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from trackmine.masks.models import BBox, FlowField, Mask
from trackmine.metrics.models import Annotation
from trackmine.tracking.models import Segment, Track

TRACKS_FORMAT = "trackmine-tracks"
TRACKS_VERSION = 1


class DetectionRecord(BaseModel):
    """One line of a detections file."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    frame: int = Field(ge=0)
    class_name: str = Field(alias="class", min_length=1)
    score: float = Field(ge=0.0, le=1.0)
    bbox: tuple[float, float, float, float]
    mask: Mask
    embedding: list[float] | None = None
    gt_track: int | None = None

    def to_segment(self, index: int) -> Segment:
        return Segment(
            id=index,
            frame=self.frame,
            class_name=self.class_name,
            mask=self.mask,
            box=BBox.from_list(self.bbox),
            score=self.score,
            embedding=tuple(self.embedding) if self.embedding is not None else None,
            gt_track=self.gt_track,
        )

    @classmethod
    def from_segment(cls, seg: Segment) -> "DetectionRecord":
        return cls(
            frame=seg.frame,
            class_name=seg.class_name,
            score=seg.score,
            bbox=tuple(seg.box.as_list()),
            mask=seg.mask,
            embedding=list(seg.embedding) if seg.embedding is not None else None,
            gt_track=seg.gt_track,
        )

    def to_json_dict(self) -> dict[str, Any]:
        """Field order: frame, class, score, bbox, mask, embedding?, gt_track?."""
        data: dict[str, Any] = {
            "frame": self.frame,
            "class": self.class_name,
            "score": self.score,
            "bbox": list(self.bbox),
            "mask": self.mask.to_rle(),
        }
        if self.embedding is not None:
            data["embedding"] = list(self.embedding)
        if self.gt_track is not None:
            data["gt_track"] = self.gt_track
        return data


class SequenceMeta(BaseModel):
    """Contents of a sequence directory's ``meta.json``."""

    name: str
    frame_size: tuple[int, int]
    num_frames: int = Field(ge=0)

    @field_validator("frame_size")
    @classmethod
    def validate_frame_size(cls, v: tuple[int, int]) -> tuple[int, int]:
        if v[0] < 0 or v[1] < 0:
            raise ValueError(f"frame_size must be non-negative, got {list(v)}")
        return v


class TrackAssignment(BaseModel):
    """One line of a tracks file: which track a detection belongs to."""

    frame: int = Field(ge=0)
    det_index: int = Field(ge=0)
    track_id: int = Field(ge=0)


class TracksHeader(BaseModel):
    """First line of a tracks file."""

    format: str = TRACKS_FORMAT
    version: int = TRACKS_VERSION
    sequence: str
    num_tracks: int = Field(ge=0)


class SequenceBundle(BaseModel):
    """A sequence of per-frame segments with optional backward flows.

    ``flows[i]`` maps frame ``i + 1`` back to frame ``i``, so a bundle with
    flows holds exactly ``num_frames - 1`` of them.
    """

    name: str = "sequence"
    frame_size: tuple[int, int] = (0, 0)
    frames: list[list[Segment]] = Field(default_factory=list)
    flows: list[FlowField] | None = None

    @model_validator(mode="after")
    def _check_consistency(self) -> "SequenceBundle":
        seen: set[int] = set()
        for t, frame in enumerate(self.frames):
            for seg in frame:
                if seg.frame != t:
                    raise ValueError(
                        f"Segment {seg.id} has frame {seg.frame} but is stored in frame {t}"
                    )
                if seg.mask.size != self.frame_size:
                    raise ValueError(
                        f"Segment {seg.id} mask size {list(seg.mask.size)} "
                        f"does not match frame size {list(self.frame_size)}"
                    )
                if seg.id in seen:
                    raise ValueError(f"Duplicate segment id {seg.id}")
                seen.add(seg.id)
        if self.flows is not None:
            expected = max(len(self.frames) - 1, 0)
            if len(self.flows) != expected:
                raise ValueError(
                    f"Expected {expected} flows for {len(self.frames)} frames, got {len(self.flows)}"
                )
            for i, flow in enumerate(self.flows):
                if (flow.height, flow.width) != self.frame_size:
                    raise ValueError(
                        f"Flow for frame {i + 1} has size {[flow.height, flow.width]}, "
                        f"expected {list(self.frame_size)}"
                    )
        return self

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    @property
    def num_segments(self) -> int:
        return sum(len(f) for f in self.frames)

    @property
    def segments(self) -> list[Segment]:
        """All segments ordered by id."""
        return sorted((s for f in self.frames for s in f), key=lambda s: s.id)

    def segment(self, segment_id: int) -> Segment:
        for frame in self.frames:
            for seg in frame:
                if seg.id == segment_id:
                    return seg
        raise KeyError(segment_id)

    @property
    def classes(self) -> list[str]:
        return sorted({s.class_name for f in self.frames for s in f})

    @property
    def has_embeddings(self) -> bool:
        return self.num_segments > 0 and all(s.embedding is not None for f in self.frames for s in f)

    @property
    def gt_tracks(self) -> dict[int, int] | None:
        """Segment id -> ground-truth track id, or None when no segment is labeled."""
        labels = {s.id: s.gt_track for f in self.frames for s in f if s.gt_track is not None}
        return labels or None

    def flow_for(self, t: int) -> FlowField | None:
        """Backward flow of frame ``t`` (None for frame 0 or when flows are absent)."""
        if t == 0 or self.flows is None:
            return None
        return self.flows[t - 1]

    def mining_input(self) -> list[tuple[list[Segment], FlowField | None]]:
        return [(frame, self.flow_for(t)) for t, frame in enumerate(self.frames)]

    def with_labels(self, labels: dict[int, int | None]) -> "SequenceBundle":
        """Copy with ``gt_track`` replaced from ``labels`` (missing ids become None)."""
        frames = [
            [s.model_copy(update={"gt_track": labels.get(s.id)}) for s in frame]
            for frame in self.frames
        ]
        return self.model_copy(update={"frames": frames})

    def gt_annotations(self) -> list[list[Annotation]]:
        """Per-frame ground-truth annotations from the ``gt_track`` labels."""
        return [
            [
                Annotation(track_id=s.gt_track, class_name=s.class_name, mask=s.mask, box=s.box)
                for s in frame
                if s.gt_track is not None
            ]
            for frame in self.frames
        ]

    def track_annotations(self, tracks: list[Track]) -> list[list[Annotation]]:
        """Per-frame predicted annotations, one per segment assigned to a track."""
        by_id = {s.id: s for f in self.frames for s in f}
        out: list[list[Annotation]] = [[] for _ in self.frames]
        for track in tracks:
            for sid in track.segments:
                seg = by_id[sid]
                out[seg.frame].append(
                    Annotation(track_id=track.id, class_name=seg.class_name, mask=seg.mask, box=seg.box)
                )
        return out
