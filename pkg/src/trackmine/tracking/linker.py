"""Inference-time track linking.

Segments are associated over a sliding window of past frames using
embedding distance, temporal offset and (optionally) signed box IoU. The
relaxed assignment from the miner is reused; only the payoff and the
predecessor candidate set change, which lets tracks jump over occlusions
of up to ``window`` frames.
"""

import logging
from collections.abc import Sequence

import numpy as np

from trackmine.errors import FrameOrderError, MissingEmbeddingError
from trackmine.lap import NEG_INF, solve_relaxed_lap
from trackmine.masks.models import BBox
from trackmine.tracking.models import LinkerConfig, Segment, Track
from trackmine.tracking.track_graph import TrackGraph

logger = logging.getLogger(__name__)


def siou(a: BBox, b: BBox) -> float:
    """Signed IoU: plain IoU for overlapping boxes, negative and
    decreasing with distance for disjoint ones.
    """
    inter = BBox(
        u1=max(a.u1, b.u1),
        v1=max(a.v1, b.v1),
        u2=min(a.u2, b.u2),
        v2=min(a.v2, b.v2),
    )
    signed = inter.area if inter.is_proper else -inter.area
    denom = a.area + b.area - signed
    if denom == 0:
        return 0.0
    return signed / denom


def _embedding(seg: Segment) -> np.ndarray:
    emb = seg.embedding_array()
    if emb is None:
        raise MissingEmbeddingError(f"Segment {seg.id} (frame {seg.frame}) has no embedding")
    return emb


def dissimilarity(prev: Segment, cur: Segment, cfg: LinkerConfig) -> float:
    """pi* = [siou] sIoU + [embedding] ||a_cur - a_prev|| + [time] |dt| / window."""
    total = 0.0
    if cfg.use_siou:
        total += siou(cur.box, prev.box)
    if cfg.use_embedding:
        total += float(np.linalg.norm(_embedding(cur) - _embedding(prev)))
    if cfg.use_time:
        total += abs(cur.frame - prev.frame) / cfg.window
    return total


def inference_payoff(prev: Segment, cur: Segment, cfg: LinkerConfig) -> float:
    """-pi* for same-class pairs within the threshold, -inf otherwise."""
    if cur.frame <= prev.frame:
        raise FrameOrderError(
            f"Predecessor frame {prev.frame} is not before current frame {cur.frame}"
        )
    if prev.class_name != cur.class_name:
        return NEG_INF
    pi_star = dissimilarity(prev, cur, cfg)
    if pi_star > cfg.tau:
        return NEG_INF
    return -pi_star


def candidate_set(g: TrackGraph, t: int, window: int) -> list[Segment]:
    """Terminal segments of the last ``window`` frames before t, ordered by (frame, id)."""
    return [
        seg
        for f in range(max(t - window, 0), t)
        for seg in sorted(g.segments_in_frame(f), key=lambda s: s.id)
        if not g.has_successor(seg.id)
    ]


def filter_short_tracks(tracks: Sequence[Track], n: int) -> list[Track]:
    """Keep tracks with at least n segments, renumbered densely in input order."""
    kept = [trk for trk in tracks if len(trk) >= n]
    return [trk.model_copy(update={"id": i}) for i, trk in enumerate(kept)]


def link_graph(frames: Sequence[Sequence[Segment]], cfg: LinkerConfig) -> TrackGraph:
    """Build the association graph; list position is the frame index."""
    g = TrackGraph()
    for t, segments in enumerate(frames):
        bad = [s.id for s in segments if s.frame != t]
        if bad:
            raise FrameOrderError(f"Segments {bad} do not belong to frame {t}")

        candidates = candidate_set(g, t, cfg.window)
        current = list(segments)
        g.add_segments(current)
        if not candidates or not current:
            continue

        payoff = np.full((len(candidates), len(current)), NEG_INF)
        for i, prev in enumerate(candidates):
            for j, cur in enumerate(current):
                payoff[i, j] = inference_payoff(prev, cur, cfg)

        pairs = solve_relaxed_lap(payoff)
        for i, j in pairs:
            g.add_edge(candidates[i].id, current[j].id)
        logger.debug(
            f"Frame {t}: {len(candidates)} candidates x {len(current)} segments, "
            f"{len(pairs)} links"
        )
    return g


def link_sequence(frames: Sequence[Sequence[Segment]], cfg: LinkerConfig | None = None) -> list[Track]:
    """Link per-frame segments into tracks and drop the short ones."""
    cfg = cfg or LinkerConfig()
    g = link_graph(frames, cfg)
    tracks = filter_short_tracks(g.to_tracks(), cfg.min_track)
    logger.info(
        f"Linked {len(frames)} frames ({', '.join(cfg.terms)}): "
        f"{g.vertex_count} segments, {len(tracks)} tracks of >= {cfg.min_track}"
    )
    return tracks
