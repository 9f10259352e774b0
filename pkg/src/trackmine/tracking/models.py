"""Pydantic models for segments, tracks and the mining/linking parameters."""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from trackmine.masks.models import BBox, Mask

EMBEDDING_NORM_TOLERANCE = 1e-6

PayoffTerm = Literal["siou", "embedding", "time"]
PAYOFF_TERMS: tuple[str, ...] = ("siou", "embedding", "time")


class Segment(BaseModel):
    """One detected instance in one frame."""

    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=0)  # index within the sequence (detection-file record order)
    frame: int = Field(ge=0)
    class_name: str
    mask: Mask
    box: BBox
    score: float = Field(default=1.0, ge=0.0, le=1.0)
    embedding: tuple[float, ...] | None = None
    gt_track: int | None = None

    @field_validator("embedding")
    @classmethod
    def validate_embedding(cls, v: tuple[float, ...] | None) -> tuple[float, ...] | None:
        if v is None:
            return v
        if len(v) == 0:
            raise ValueError("Embedding must not be empty")
        norm = float(np.linalg.norm(np.asarray(v, dtype=np.float64)))
        if not np.isfinite(norm) or abs(norm - 1.0) > EMBEDDING_NORM_TOLERANCE:
            raise ValueError(f"Embedding must have unit L2 norm, got {norm:.9f}")
        return v

    def embedding_array(self) -> np.ndarray | None:
        if self.embedding is None:
            return None
        return np.asarray(self.embedding, dtype=np.float64)


class MinerConfig(BaseModel):
    """Thresholds of the mining characteristic function (pixels, pixels, ratio)."""

    model_config = ConfigDict(frozen=True)

    tau0: float = Field(default=10.0, ge=0.0)
    tau1: float = Field(default=10.0, ge=0.0)
    tau2: float = Field(default=2.0, ge=0.0)


class LinkerConfig(BaseModel):
    """Inference-time association parameters."""

    model_config = ConfigDict(frozen=True)

    tau: float = 1.0
    window: int = Field(default=12, ge=1)
    min_track: int = Field(default=5, ge=1)
    use_embedding: bool = True
    use_time: bool = True
    use_siou: bool = False

    @field_validator("tau")
    @classmethod
    def validate_tau(cls, v: float) -> float:
        if not np.isfinite(v):
            raise ValueError("tau must be finite")
        return v

    @model_validator(mode="after")
    def _check_terms(self) -> "LinkerConfig":
        if not (self.use_embedding or self.use_time or self.use_siou):
            raise ValueError("At least one payoff term (siou, embedding, time) must be enabled")
        return self

    @classmethod
    def from_terms(cls, terms: list[str] | tuple[str, ...], **kwargs) -> "LinkerConfig":
        unknown = sorted(set(terms) - set(PAYOFF_TERMS))
        if unknown:
            raise ValueError(
                f"Unknown payoff term(s): {', '.join(unknown)}. Choose from: {', '.join(PAYOFF_TERMS)}"
            )
        return cls(
            use_siou="siou" in terms,
            use_embedding="embedding" in terms,
            use_time="time" in terms,
            **kwargs,
        )

    @property
    def terms(self) -> list[str]:
        enabled = {"siou": self.use_siou, "embedding": self.use_embedding, "time": self.use_time}
        return [name for name in PAYOFF_TERMS if enabled[name]]


class Track(BaseModel):
    """A frame-ordered chain of segments of one class."""

    id: int = Field(ge=0)
    class_name: str
    segments: list[int] = Field(min_length=1)
    frames: list[int] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_frames(self) -> "Track":
        if len(self.frames) != len(self.segments):
            raise ValueError("Track frames and segments must have equal length")
        if any(b <= a for a, b in zip(self.frames, self.frames[1:], strict=False)):
            raise ValueError(f"Track {self.id} frames must be strictly increasing")
        return self

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def first_frame(self) -> int:
        return self.frames[0]

    @property
    def last_frame(self) -> int:
        return self.frames[-1]

    @property
    def max_gap(self) -> int:
        """Largest frame difference between consecutive segments (0 for length 1)."""
        return max((b - a for a, b in zip(self.frames, self.frames[1:], strict=False)), default=0)
