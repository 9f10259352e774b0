"""Per-frame matching for the segmentation (MOTS) metrics.

A ground-truth and a predicted mask match iff their IoU exceeds 0.5. With
non-overlapping masks on each side this pairing is unique, so no
assignment problem has to be solved.
"""

from collections.abc import Sequence

import numpy as np

from trackmine.errors import DimensionMismatchError, OverlapError
from trackmine.metrics.models import Annotation, FrameMatch, FrameTally, MatchState

MATCH_THRESHOLD = 0.5


def _stack_masks(annotations: Sequence[Annotation], side: str) -> np.ndarray:
    """(n, H*W) boolean matrix of the masks; rejects overlaps and duplicate ids."""
    ids = [a.track_id for a in annotations]
    if len(set(ids)) != len(ids):
        raise ValueError(f"Duplicate {side} track ids within one frame: {sorted(ids)}")
    if not annotations:
        return np.zeros((0, 0), dtype=bool)
    missing = [a.track_id for a in annotations if a.mask is None]
    if missing:
        raise ValueError(f"{side} annotations {missing} have no mask")
    sizes = {a.mask.size for a in annotations}
    if len(sizes) > 1:
        raise DimensionMismatchError(f"{side} masks have differing sizes: {sorted(sizes)}")
    stacked = np.stack([a.mask.to_array().ravel() for a in annotations])
    if (stacked.sum(axis=0) > 1).any():
        raise OverlapError(f"{side} masks overlap within one frame")
    return stacked


def check_frame_overlap(annotations: Sequence[Annotation], side: str, frame: int) -> None:
    """Reject overlapping masks in one frame, whatever their classes."""
    masks = [a.mask for a in annotations if a.mask is not None]
    if len(masks) < 2 or len({m.size for m in masks}) > 1:
        return
    coverage = np.sum([m.to_array() for m in masks], axis=0)
    if (coverage > 1).any():
        raise OverlapError(f"{side} masks overlap in frame {frame}")


def count_id_switches(matches: dict[int, int], state: MatchState) -> int:
    """Matched gt tracks whose reference predicted id differs from the current one."""
    switches = 0
    for gt_track, pred_track in matches.items():
        ref = state.reference(gt_track)
        if ref is not None and ref != pred_track:
            switches += 1
    return switches


def mots_match_frame(
    gt: Sequence[Annotation],
    pred: Sequence[Annotation],
    state: MatchState | None = None,
) -> FrameMatch:
    """Match one frame by mask IoU > 0.5 and tally TP / FP / IDS.

    ``state`` carries correspondences across frames and is updated in place.
    """
    state = state if state is not None else MatchState()
    g = _stack_masks(gt, "ground-truth")
    p = _stack_masks(pred, "predicted")

    matches: dict[int, int] = {}
    ious: dict[int, float] = {}
    if len(gt) and len(pred):
        if g.shape[1] != p.shape[1]:
            raise DimensionMismatchError("Ground-truth and predicted masks differ in size")
        inter = g.astype(np.int64) @ p.T.astype(np.int64)
        union = g.sum(axis=1)[:, None] + p.sum(axis=1)[None, :] - inter
        for i, ann in enumerate(gt):
            for j, cand in enumerate(pred):
                if union[i, j] == 0:
                    continue
                iou = int(inter[i, j]) / int(union[i, j])
                if iou > MATCH_THRESHOLD:
                    matches[ann.track_id] = cand.track_id
                    ious[ann.track_id] = iou

    tally = FrameTally(
        tp=len(matches),
        fp=len(pred) - len(matches),
        ids=count_id_switches(matches, state),
        gt=len(gt),
        iou_sum=sum(ious[a.track_id] for a in gt if a.track_id in ious),
    )
    state.update(matches)
    return FrameMatch(matches=matches, ious=ious, tally=tally)
