"""File formats: detections, flow rasters, tracks, reports, sequence directories."""

from trackmine.io.detections import load_detections, write_detections
from trackmine.io.flow import load_flow, write_flow
from trackmine.io.models import DetectionRecord, SequenceBundle, SequenceMeta
from trackmine.io.report import load_report, write_report
from trackmine.io.sequence import load_sequence, write_sequence
from trackmine.io.tracks import load_tracks, write_tracks

__all__ = [
    "DetectionRecord",
    "SequenceBundle",
    "SequenceMeta",
    "load_detections",
    "load_flow",
    "load_report",
    "load_sequence",
    "load_tracks",
    "write_detections",
    "write_flow",
    "write_report",
    "write_sequence",
    "write_tracks",
]
