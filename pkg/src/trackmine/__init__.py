"""trackmine: tracklet mining and track linking for MOTS.

Mines tracklets from per-frame segmentation masks and backward optical
flow, links segments into tracks with embedding distances, and evaluates
the result with the CLEAR MOT and MOTS metrics.
"""

from importlib.metadata import version as _get_version

__version__ = _get_version("trackmine")

from trackmine.io import SequenceBundle, load_sequence, write_sequence
from trackmine.metrics import compute_mot, compute_mots
from trackmine.pipeline import (
    label_with_tracklets,
    run_eval,
    run_link,
    run_link_many,
    run_mine,
    run_mine_many,
    run_synth,
    run_triplet_loss,
)
from trackmine.synth import SynthConfig, synth_generate
from trackmine.tracking import LinkerConfig, MinerConfig, Segment, Track

__all__ = [
    "__version__",
    "LinkerConfig",
    "MinerConfig",
    "Segment",
    "SequenceBundle",
    "SynthConfig",
    "Track",
    "compute_mot",
    "compute_mots",
    "label_with_tracklets",
    "load_sequence",
    "run_eval",
    "run_link",
    "run_link_many",
    "run_mine",
    "run_mine_many",
    "run_synth",
    "run_triplet_loss",
    "synth_generate",
    "write_sequence",
]
