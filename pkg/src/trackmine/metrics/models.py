"""Pydantic models for evaluation inputs, per-frame tallies and reports."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from trackmine.masks.models import BBox, Mask

EvalMode = Literal["mots", "mot"]
IdSwitchRule = Literal["last_known", "previous_frame"]


class Annotation(BaseModel):
    """One ground-truth or predicted object in one frame."""

    model_config = ConfigDict(frozen=True)

    track_id: int
    class_name: str
    mask: Mask | None = None
    box: BBox | None = None


class FrameTally(BaseModel):
    """Counts produced by matching one frame (or summed over many)."""

    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    ids: int = Field(default=0, ge=0)
    gt: int = Field(default=0, ge=0)
    iou_sum: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _check_bounds(self) -> "FrameTally":
        if self.tp > self.gt:
            raise ValueError(f"tp ({self.tp}) cannot exceed gt ({self.gt})")
        if self.iou_sum > self.tp + 1e-9:
            raise ValueError(f"iou_sum ({self.iou_sum}) cannot exceed tp ({self.tp})")
        return self

    def __add__(self, other: "FrameTally") -> "FrameTally":
        return FrameTally(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            ids=self.ids + other.ids,
            gt=self.gt + other.gt,
            iou_sum=self.iou_sum + other.iou_sum,
        )

    @property
    def fn(self) -> int:
        return self.gt - self.tp


class FrameMatch(BaseModel):
    """Correspondences (gt track id -> predicted track id) and tally of one frame."""

    matches: dict[int, int] = Field(default_factory=dict)
    ious: dict[int, float] = Field(default_factory=dict)
    tally: FrameTally = Field(default_factory=FrameTally)


class MatchState:
    """Cross-frame memory needed to count identity switches.

    ``previous`` holds the correspondences of the last evaluated frame,
    ``last_known`` the most recent predicted id each gt track was matched to.
    """

    def __init__(self, rule: IdSwitchRule = "last_known") -> None:
        self.rule = rule
        self.previous: dict[int, int] = {}
        self.last_known: dict[int, int] = {}

    def reference(self, gt_track: int) -> int | None:
        if self.rule == "previous_frame":
            return self.previous.get(gt_track)
        return self.last_known.get(gt_track)

    def update(self, matches: dict[int, int]) -> None:
        self.previous = dict(matches)
        self.last_known.update(matches)


class ClassMetrics(BaseModel):
    """Summed tallies and the scores derived from them."""

    totals: FrameTally = Field(default_factory=FrameTally)
    motsa: float | None = None
    smotsa: float | None = None
    motsp: float | None = None
    mota: float | None = None
    motp: float | None = None

    @classmethod
    def from_totals(cls, totals: FrameTally, mode: EvalMode) -> "ClassMetrics":
        """Derive scores; accuracy is None when there is no ground truth."""
        precision = totals.iou_sum / totals.tp if totals.tp else 0.0
        accuracy = soft = None
        if totals.gt:
            accuracy = (totals.tp - totals.fp - totals.ids) / totals.gt
            soft = (totals.iou_sum - totals.fp - totals.ids) / totals.gt
        if mode == "mots":
            return cls(totals=totals, motsa=accuracy, smotsa=soft, motsp=precision)
        return cls(totals=totals, mota=accuracy, motp=precision)


class MetricsReport(BaseModel):
    """Per-class and aggregate evaluation results."""

    mode: EvalMode
    id_switch_rule: IdSwitchRule = "last_known"
    num_frames: int = 0
    classes: dict[str, ClassMetrics] = Field(default_factory=dict)
    overall: ClassMetrics = Field(default_factory=ClassMetrics)
