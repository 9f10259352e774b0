"""Automatic tracklet mining from per-frame segments and backward flow.

The graph is built inductively: frame 0 contributes vertices only; for each
later frame the segments of frame t-1 are warped into frame t, scored
against the segments of frame t (mask IoU plus a characteristic function
that vetoes ambiguous or weakly supported matches), and the relaxed
assignment over that payoff matrix adds the edges.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np

from trackmine.errors import FrameOrderError
from trackmine.lap import NEG_INF, solve_relaxed_lap
from trackmine.masks.models import FlowField, IntersectionStats, Mask
from trackmine.masks.rle import mask_area, mask_iou
from trackmine.masks.warp import intersection_stats, warp_mask
from trackmine.tracking.models import MinerConfig, Segment, Track
from trackmine.tracking.track_graph import TrackGraph

logger = logging.getLogger(__name__)


class WarpCache:
    """Frame t-1 segments warped into frame t, plus memoised per-segment stats.

    The characteristic function only depends on the current segment and the
    set of warped same-class masks, so its statistics are computed once per
    current segment and shared across all predecessor rows.
    """

    def __init__(self, previous: Sequence[Segment], flow: FlowField) -> None:
        self.flow = flow
        self._warped: dict[int, Mask] = {seg.id: warp_mask(seg.mask, flow) for seg in previous}
        self._by_class: dict[str, list[Mask]] = {}
        for seg in previous:
            self._by_class.setdefault(seg.class_name, []).append(self._warped[seg.id])
        self._stats: dict[int, IntersectionStats] = {}

    def warped(self, seg: Segment) -> Mask:
        if seg.id not in self._warped:
            self._warped[seg.id] = warp_mask(seg.mask, self.flow)
        return self._warped[seg.id]

    def same_class(self, class_name: str) -> list[Mask]:
        return self._by_class.get(class_name, [])

    def stats_for(self, cur: Segment) -> IntersectionStats:
        if cur.id not in self._stats:
            self._stats[cur.id] = intersection_stats(cur.mask, self.same_class(cur.class_name))
        return self._stats[cur.id]


def eta_mining(
    s: Segment,
    stats: IntersectionStats,
    same_class: bool,
    cfg: MinerConfig,
) -> float:
    """Characteristic function: 0 for a valid mapping, -inf otherwise.

    A segment is rejected when its best overlap is not clearly ahead of the
    runner-up (b1 - b2 < tau0), too small (b1 < tau1), or not dominant over
    the uncovered area (b1 / r < tau2, with r == 0 reading as +inf).
    """
    if not same_class:
        return NEG_INF
    if stats.b1 - stats.b2 < cfg.tau0:
        return NEG_INF
    if stats.b1 < cfg.tau1:
        return NEG_INF
    ratio = math.inf if stats.r == 0 else stats.b1 / stats.r
    if ratio < cfg.tau2:
        return NEG_INF
    return 0.0


def mining_payoff(
    prev: Segment,
    cur: Segment,
    flow: FlowField,
    warped_cache: WarpCache | None = None,
    cfg: MinerConfig | None = None,
) -> float:
    """IoU(cur, warp(prev)) + eta; -inf absorbs the sum."""
    if prev.frame != cur.frame - 1:
        raise FrameOrderError(
            f"Mining payoff needs consecutive frames, got {prev.frame} and {cur.frame}"
        )
    cfg = cfg or MinerConfig()
    cache = warped_cache if warped_cache is not None else WarpCache([prev], flow)

    eta = eta_mining(cur, cache.stats_for(cur), prev.class_name == cur.class_name, cfg)
    if eta == NEG_INF:
        return NEG_INF
    return mask_iou(cur.mask, cache.warped(prev)) + eta


def _drop_empty(segments: Sequence[Segment]) -> list[Segment]:
    kept = []
    for seg in segments:
        if mask_area(seg.mask) == 0:
            logger.warning(f"Dropping segment {seg.id} in frame {seg.frame}: empty mask")
            continue
        kept.append(seg)
    return kept


def mine_step(
    g: TrackGraph,
    segments_t: Sequence[Segment],
    flow_t: FlowField | None,
    cfg: MinerConfig | None = None,
    frame: int | None = None,
) -> TrackGraph:
    """Extend the graph with frame t (in place) and return it.

    ``frame`` defaults to the frame of the first segment; pass it explicitly
    for frames without detections.
    """
    cfg = cfg or MinerConfig()
    current = _drop_empty(segments_t)
    if frame is None:
        if not segments_t:
            return g
        frame = segments_t[0].frame

    bad = [s.id for s in segments_t if s.frame != frame]
    if bad:
        raise FrameOrderError(f"Segments {bad} do not belong to frame {frame}")
    last = g.last_frame
    if last is not None and last >= frame:
        raise FrameOrderError(f"Graph already holds frame {last}; cannot add frame {frame}")

    previous = g.segments_in_frame(frame - 1) if frame > 0 else []
    g.add_segments(current)
    if not previous or not current:
        return g
    if flow_t is None:
        raise FrameOrderError(f"Missing flow for frame {frame}")

    cache = WarpCache(previous, flow_t)
    payoff = np.full((len(previous), len(current)), NEG_INF)
    for i, prev in enumerate(previous):
        for j, cur in enumerate(current):
            payoff[i, j] = mining_payoff(prev, cur, flow_t, cache, cfg)

    pairs = solve_relaxed_lap(payoff)
    for i, j in pairs:
        g.add_edge(previous[i].id, current[j].id)
    logger.debug(
        f"Frame {frame}: {len(previous)}x{len(current)} candidates, {len(pairs)} matches"
    )
    return g


def mine_sequence(
    frames: Sequence[tuple[Sequence[Segment], FlowField | None]],
    cfg: MinerConfig | None = None,
) -> TrackGraph:
    """Fold mine_step over a sequence of (segments, flow) pairs.

    List position is the frame index; frame 0 needs no flow.
    """
    cfg = cfg or MinerConfig()
    g = TrackGraph()
    for t, (segments, flow) in enumerate(frames):
        if t > 0 and flow is None:
            raise FrameOrderError(f"Missing flow for frame {t}")
        mine_step(g, segments, flow, cfg, frame=t)
    logger.info(
        f"Mined {len(frames)} frames: {g.vertex_count} segments, {g.edge_count} links"
    )
    return g


def tracklets(g: TrackGraph) -> list[list[int]]:
    """Frame-ordered segment-id paths; isolated vertices are length-1 tracklets."""
    return g.paths()


def tracklet_tracks(g: TrackGraph) -> list[Track]:
    return g.to_tracks()
