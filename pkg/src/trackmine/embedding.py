"""Numeric kernels for learning segment embeddings.

Mask-pooling of feature maps, the matching / non-matching sets of a batch,
the batch-hard triplet loss (with its analytic subgradient), and the
majority heuristic that keeps occlusion-split tracklets out of the loss.
"""

import logging
import math
from collections.abc import Hashable, Sequence
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from trackmine.errors import DegenerateInputError, DimensionMismatchError
from trackmine.masks.models import Mask
from trackmine.tracking.models import EMBEDDING_NORM_TOLERANCE, Segment

logger = logging.getLogger(__name__)

Denominator = Literal["valid", "batch"]


class FeatureMap(BaseModel):
    """N-channel feature map over an h x w grid, stored as an (N, h, w) array."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ValueError(f"Feature map must have shape (N, h, w) with h, w >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Feature map values must be finite")
        arr.setflags(write=False)
        return arr

    @property
    def channels(self) -> int:
        return int(self.values.shape[0])

    @property
    def height(self) -> int:
        return int(self.values.shape[1])

    @property
    def width(self) -> int:
        return int(self.values.shape[2])


class LossBatch(BaseModel):
    """Embeddings with their class and tracklet labels."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    embeddings: np.ndarray
    classes: tuple[str, ...]
    tracks: tuple[int | str, ...]

    @field_validator("embeddings", mode="before")
    @classmethod
    def validate_embeddings(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=np.float64)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ValueError(f"Embeddings must be a 2-D array, got shape {arr.shape}")
        norms = np.linalg.norm(arr, axis=1)
        if np.any(~np.isfinite(norms) | (np.abs(norms - 1.0) > EMBEDDING_NORM_TOLERANCE)):
            raise ValueError("Embeddings must be L2-normalised")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check_lengths(self) -> "LossBatch":
        n = self.embeddings.shape[0]
        if len(self.classes) != n or len(self.tracks) != n:
            raise ValueError(
                f"Batch has {n} embeddings, {len(self.classes)} classes, {len(self.tracks)} tracks"
            )
        return self

    def __len__(self) -> int:
        return int(self.embeddings.shape[0])

    @classmethod
    def from_segments(cls, segments: Sequence[Segment]) -> "LossBatch":
        """Batch from segments carrying an embedding and a tracklet label."""
        usable = [s for s in segments if s.embedding is not None and s.gt_track is not None]
        if len(usable) < len(segments):
            logger.debug(f"Skipping {len(segments) - len(usable)} unlabeled segments")
        return cls(
            embeddings=[list(s.embedding) for s in usable] if usable else np.zeros((0, 0)),
            classes=tuple(s.class_name for s in usable),
            tracks=tuple(s.gt_track for s in usable),
        )


def mask_pool(x: FeatureMap, m: Mask) -> np.ndarray:
    """Per-channel mean of the feature map over the mask's 1-pixels."""
    if m.size != (x.height, x.width):
        raise DimensionMismatchError(
            f"Mask size {list(m.size)} does not match feature map size {[x.height, x.width]}"
        )
    grid = m.to_array()
    count = int(np.count_nonzero(grid))
    if count == 0:
        raise DegenerateInputError("Cannot mask-pool under an empty mask")
    return x.values[:, grid].sum(axis=1) / count


def matching_sets(anchor_index: int, batch: LossBatch) -> tuple[set[int], set[int]]:
    """Same-class items of the anchor's tracklet, and same-class items of other tracklets."""
    cls = batch.classes[anchor_index]
    trk = batch.tracks[anchor_index]
    matching: set[int] = set()
    non_matching: set[int] = set()
    for k, (c, t) in enumerate(zip(batch.classes, batch.tracks, strict=True)):
        if k == anchor_index or c != cls:
            continue
        if t == trk:
            matching.add(k)
        else:
            non_matching.add(k)
    return matching, non_matching


def _label_codes(labels: Sequence[Hashable]) -> np.ndarray:
    codes: dict[Hashable, int] = {}
    return np.array([codes.setdefault(lab, len(codes)) for lab in labels], dtype=np.int64)


def triplet_loss_and_grad(
    embeddings: np.ndarray,
    classes: Sequence[str],
    tracks: Sequence[Hashable],
    beta: float,
    denominator: Denominator = "valid",
) -> tuple[float, np.ndarray]:
    """Batch-hard triplet loss and its subgradient w.r.t. each embedding.

    Anchors without a matching or without a non-matching item are skipped.
    With ``denominator="valid"`` the hinge sum is divided by the number of
    remaining anchors; with ``"batch"`` by the batch size.
    """
    if beta < 0:
        raise ValueError(f"Margin beta must be >= 0, got {beta}")
    emb = np.asarray(embeddings, dtype=np.float64)
    n = emb.shape[0]
    grad = np.zeros_like(emb)
    if n == 0:
        return 0.0, grad

    diff = emb[:, None, :] - emb[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    cls = _label_codes(classes)
    trk = _label_codes(tracks)
    same_class = cls[:, None] == cls[None, :]
    same_track = trk[:, None] == trk[None, :]
    pos = same_class & same_track & ~np.eye(n, dtype=bool)
    neg = same_class & ~same_track
    valid = pos.any(axis=1) & neg.any(axis=1)

    count = int(valid.sum()) if denominator == "valid" else n
    if not valid.any():
        return 0.0, grad

    hardest_pos = np.where(pos, dist, -np.inf).argmax(axis=1)
    hardest_neg = np.where(neg, dist, np.inf).argmin(axis=1)

    hinges: list[float] = []
    for i in np.flatnonzero(valid):
        p, q = hardest_pos[i], hardest_neg[i]
        h = dist[i, p] - dist[i, q] + beta
        if h <= 0:
            continue
        hinges.append(float(h))
        if dist[i, p] > 0:
            unit = diff[i, p] / dist[i, p]
            grad[i] += unit
            grad[p] -= unit
        if dist[i, q] > 0:
            unit = diff[i, q] / dist[i, q]
            grad[i] -= unit
            grad[q] += unit

    return math.fsum(hinges) / count, grad / count


def batch_hard_triplet_loss(
    batch: LossBatch,
    beta: float,
    denominator: Denominator = "valid",
) -> float:
    """Mean hinge of (hardest positive - hardest negative + beta) over anchors."""
    loss, _ = triplet_loss_and_grad(
        batch.embeddings, batch.classes, batch.tracks, beta, denominator
    )
    return loss


def majority_tracklet_filter(
    window: Sequence[tuple[int, Segment]],
    window_len: int,
) -> list[Segment]:
    """Keep segments whose tracklet appears in more than half the window's frames.

    The tracklet id is the segment's ``gt_track`` label; unlabeled segments
    are dropped.
    """
    frames_of: dict[int, set[int]] = {}
    for frame, seg in window:
        if seg.gt_track is not None:
            frames_of.setdefault(seg.gt_track, set()).add(frame)
    kept = [
        seg
        for _, seg in window
        if seg.gt_track is not None and len(frames_of[seg.gt_track]) > window_len / 2
    ]
    logger.debug(f"Majority filter kept {len(kept)}/{len(window)} segments")
    return kept


def sample_training_window(
    frames: Sequence[Sequence[Segment]],
    window_len: int,
    rng: np.random.Generator,
) -> list[tuple[int, Segment]]:
    """Draw ``window_len`` contiguous frames at a random offset."""
    if window_len < 1:
        raise ValueError(f"window_len must be >= 1, got {window_len}")
    if len(frames) < window_len:
        raise DegenerateInputError(
            f"Sequence has {len(frames)} frames, fewer than window length {window_len}"
        )
    start = int(rng.integers(0, len(frames) - window_len + 1))
    return [
        (t, seg)
        for t in range(start, start + window_len)
        for seg in frames[t]
    ]
