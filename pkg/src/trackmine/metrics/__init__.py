"""CLEAR MOT and MOTS evaluation."""

from trackmine.metrics.clear_mot import clear_mot_match_frame
from trackmine.metrics.evaluate import (
    class_frame_tallies,
    compute_mot,
    compute_mots,
    evaluate_sequence,
    sum_tallies,
)
from trackmine.metrics.models import (
    Annotation,
    ClassMetrics,
    FrameMatch,
    FrameTally,
    MatchState,
    MetricsReport,
)
from trackmine.metrics.mots import mots_match_frame

__all__ = [
    "Annotation",
    "ClassMetrics",
    "FrameMatch",
    "FrameTally",
    "MatchState",
    "MetricsReport",
    "class_frame_tallies",
    "clear_mot_match_frame",
    "compute_mot",
    "compute_mots",
    "evaluate_sequence",
    "mots_match_frame",
    "sum_tallies",
]
