"""Sequence-level evaluation: per-class matching, tally summation, scores."""

import logging
from collections.abc import Callable, Sequence

from trackmine.errors import DegenerateInputError
from trackmine.metrics.clear_mot import clear_mot_match_frame
from trackmine.metrics.models import (
    Annotation,
    ClassMetrics,
    EvalMode,
    FrameMatch,
    FrameTally,
    IdSwitchRule,
    MatchState,
    MetricsReport,
)
from trackmine.metrics.mots import check_frame_overlap, mots_match_frame

logger = logging.getLogger(__name__)

FrameMatcher = Callable[[Sequence[Annotation], Sequence[Annotation], MatchState], FrameMatch]

_MATCHERS: dict[str, FrameMatcher] = {
    "mots": mots_match_frame,
    "mot": clear_mot_match_frame,
}


def _align(
    gt_frames: Sequence[Sequence[Annotation]],
    pred_frames: Sequence[Sequence[Annotation]],
) -> tuple[list[Sequence[Annotation]], list[Sequence[Annotation]]]:
    """Pad the shorter side with empty frames."""
    n = max(len(gt_frames), len(pred_frames))
    gt = list(gt_frames) + [[]] * (n - len(gt_frames))
    pred = list(pred_frames) + [[]] * (n - len(pred_frames))
    if len(gt_frames) != len(pred_frames):
        logger.debug(f"Padded sequences to {n} frames (gt {len(gt_frames)}, pred {len(pred_frames)})")
    return gt, pred


def class_frame_tallies(
    gt_frames: Sequence[Sequence[Annotation]],
    pred_frames: Sequence[Sequence[Annotation]],
    class_name: str,
    mode: EvalMode = "mots",
    id_switch_rule: IdSwitchRule = "last_known",
) -> list[FrameTally]:
    """Per-frame tallies of one class, in temporal order."""
    matcher = _MATCHERS[mode]
    state = MatchState(id_switch_rule)
    tallies = []
    for gt, pred in zip(*_align(gt_frames, pred_frames), strict=True):
        g = [a for a in gt if a.class_name == class_name]
        p = [a for a in pred if a.class_name == class_name]
        tallies.append(matcher(g, p, state).tally)
    return tallies


def sum_tallies(tallies: Sequence[FrameTally]) -> FrameTally:
    total = FrameTally()
    for t in tallies:
        total = total + t
    return total


def evaluate_sequence(
    gt_frames: Sequence[Sequence[Annotation]],
    pred_frames: Sequence[Sequence[Annotation]],
    mode: EvalMode = "mots",
    id_switch_rule: IdSwitchRule = "last_known",
) -> MetricsReport:
    """Evaluate a predicted sequence against ground truth, class by class.

    Raises:
        DegenerateInputError: if the ground truth holds no annotation at all.
    """
    if mode not in _MATCHERS:
        raise ValueError(f"Unknown evaluation mode '{mode}'. Valid: {', '.join(_MATCHERS)}")
    gt, pred = _align(gt_frames, pred_frames)
    if mode == "mots":
        for t, (g, p) in enumerate(zip(gt, pred, strict=True)):
            check_frame_overlap(g, "ground-truth", t)
            check_frame_overlap(p, "predicted", t)
    classes = sorted({a.class_name for frame in (*gt, *pred) for a in frame})

    per_class: dict[str, ClassMetrics] = {}
    for cls in classes:
        totals = sum_tallies(class_frame_tallies(gt, pred, cls, mode, id_switch_rule))
        per_class[cls] = ClassMetrics.from_totals(totals, mode)

    overall = sum_tallies([m.totals for m in per_class.values()])
    if overall.gt == 0:
        raise DegenerateInputError("Ground truth is empty over the whole sequence")

    report = MetricsReport(
        mode=mode,
        id_switch_rule=id_switch_rule,
        num_frames=len(gt),
        classes=per_class,
        overall=ClassMetrics.from_totals(overall, mode),
    )
    logger.info(
        f"Evaluated {len(gt)} frames ({mode}): TP={overall.tp} FP={overall.fp} "
        f"FN={overall.fn} IDS={overall.ids}"
    )
    return report


def compute_mots(
    gt_frames: Sequence[Sequence[Annotation]],
    pred_frames: Sequence[Sequence[Annotation]],
    id_switch_rule: IdSwitchRule = "last_known",
) -> MetricsReport:
    """MOTSA, sMOTSA and MOTSP from mask annotations."""
    return evaluate_sequence(gt_frames, pred_frames, "mots", id_switch_rule)


def compute_mot(
    gt_frames: Sequence[Sequence[Annotation]],
    pred_frames: Sequence[Sequence[Annotation]],
    id_switch_rule: IdSwitchRule = "last_known",
) -> MetricsReport:
    """MOTA and MOTP from box annotations."""
    return evaluate_sequence(gt_frames, pred_frames, "mot", id_switch_rule)
