"""Per-frame matching for the box-based CLEAR MOT metrics.

Correspondences from the previous frame are kept while their box IoU stays
above 0.5; the remaining objects are matched by a maximum-IoU assignment
restricted to pairs with IoU > 0.5.
"""

from collections.abc import Sequence

import numpy as np

from trackmine.lap import NEG_INF, solve_relaxed_lap
from trackmine.masks.rle import box_iou
from trackmine.metrics.models import Annotation, FrameMatch, FrameTally, MatchState
from trackmine.metrics.mots import MATCH_THRESHOLD, count_id_switches


def _check_boxes(annotations: Sequence[Annotation], side: str) -> None:
    ids = [a.track_id for a in annotations]
    if len(set(ids)) != len(ids):
        raise ValueError(f"Duplicate {side} track ids within one frame: {sorted(ids)}")
    missing = [a.track_id for a in annotations if a.box is None]
    if missing:
        raise ValueError(f"{side} annotations {missing} have no box")


def clear_mot_match_frame(
    gt: Sequence[Annotation],
    pred: Sequence[Annotation],
    state: MatchState | None = None,
) -> FrameMatch:
    """Match one frame of boxes and tally TP / FP / IDS (``state`` is updated)."""
    state = state if state is not None else MatchState()
    _check_boxes(gt, "ground-truth")
    _check_boxes(pred, "predicted")

    iou = np.zeros((len(gt), len(pred)))
    for i, a in enumerate(gt):
        for j, b in enumerate(pred):
            iou[i, j] = box_iou(a.box, b.box)

    gt_index = {a.track_id: i for i, a in enumerate(gt)}
    pred_index = {b.track_id: j for j, b in enumerate(pred)}

    matches: dict[int, int] = {}
    for gt_track, pred_track in state.previous.items():
        i, j = gt_index.get(gt_track), pred_index.get(pred_track)
        if i is not None and j is not None and iou[i, j] > MATCH_THRESHOLD:
            matches[gt_track] = pred_track

    taken = set(matches.values())
    free_rows = [i for i, a in enumerate(gt) if a.track_id not in matches]
    free_cols = [j for j, b in enumerate(pred) if b.track_id not in taken]
    if free_rows and free_cols:
        sub = iou[np.ix_(free_rows, free_cols)]
        payoff = np.where(sub > MATCH_THRESHOLD, sub, NEG_INF)
        for r, c in solve_relaxed_lap(payoff):
            matches[gt[free_rows[r]].track_id] = pred[free_cols[c]].track_id

    ious = {g: float(iou[gt_index[g], pred_index[p]]) for g, p in matches.items()}
    tally = FrameTally(
        tp=len(matches),
        fp=len(pred) - len(matches),
        ids=count_id_switches(matches, state),
        gt=len(gt),
        iou_sum=sum(ious[a.track_id] for a in gt if a.track_id in ious),
    )
    state.update(matches)
    return FrameMatch(matches=matches, ious=ious, tally=tally)
