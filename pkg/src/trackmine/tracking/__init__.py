"""Tracklet mining (flow-warped IoU) and track linking (embeddings).

Both build a TrackGraph frame by frame and resolve each frame with the
relaxed assignment solver in trackmine.lap.
"""

from trackmine.tracking.linker import (
    candidate_set,
    filter_short_tracks,
    inference_payoff,
    link_sequence,
    siou,
)
from trackmine.tracking.miner import (
    WarpCache,
    eta_mining,
    mine_sequence,
    mine_step,
    mining_payoff,
    tracklets,
)
from trackmine.tracking.models import LinkerConfig, MinerConfig, Segment, Track
from trackmine.tracking.track_graph import TrackGraph

__all__ = [
    "LinkerConfig",
    "MinerConfig",
    "Segment",
    "Track",
    "TrackGraph",
    "WarpCache",
    "candidate_set",
    "eta_mining",
    "filter_short_tracks",
    "inference_payoff",
    "link_sequence",
    "mine_sequence",
    "mine_step",
    "mining_payoff",
    "siou",
    "tracklets",
]
