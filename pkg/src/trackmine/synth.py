"""Synthetic sequences with known tracks, exact flow and oracle embeddings.

Each object is an axis-aligned rectangle in its own horizontal lane, so
masks never overlap. Objects move horizontally with an integer velocity
and bounce off the frame border. The backward flow maps every object pixel
to its previous position; background pixels uncovered by a moving object
point outside the grid, every other background pixel is static.
"""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from trackmine.io.models import SequenceBundle
from trackmine.masks.models import FlowField, Mask
from trackmine.masks.rle import mask_bbox
from trackmine.tracking.models import Segment

logger = logging.getLogger(__name__)


class SynthConfig(BaseModel):
    """Parameters of the synthetic generator; ``seed`` is mandatory."""

    model_config = ConfigDict(frozen=True)

    seed: int
    name: str = "synth"
    num_objects: int = Field(default=3, ge=1)
    num_frames: int = Field(default=20, ge=1)
    frame_size: tuple[int, int] = (100, 160)
    object_width: tuple[int, int] = (6, 16)
    velocity: tuple[int, int] = (1, 3)
    occlusion_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    occlusion_duration: tuple[int, int] = (3, 3)
    embedding_sigma: float = Field(default=0.0, ge=0.0)
    classes: tuple[str, ...] = ("car", "pedestrian")

    @model_validator(mode="after")
    def _check_geometry(self) -> "SynthConfig":
        height, width = self.frame_size
        if height < self.num_objects:
            raise ValueError(f"Frame height {height} cannot hold {self.num_objects} object lanes")
        lo, hi = self.object_width
        if lo < 1 or hi < lo or hi > width:
            raise ValueError(f"object_width must satisfy 1 <= min <= max <= {width}, got {list(self.object_width)}")
        vlo, vhi = self.velocity
        if vlo < 0 or vhi < vlo:
            raise ValueError(f"velocity must satisfy 0 <= min <= max, got {list(self.velocity)}")
        dlo, dhi = self.occlusion_duration
        if dlo < 1 or dhi < dlo:
            raise ValueError(
                f"occlusion_duration must satisfy 1 <= min <= max, got {list(self.occlusion_duration)}"
            )
        if not self.classes:
            raise ValueError("At least one class is required")
        return self

    @property
    def lane_height(self) -> int:
        return self.frame_size[0] // self.num_objects

    @property
    def object_height(self) -> int:
        return max(self.lane_height - 1, 1)


class _Object:
    """Trajectory and labels of one synthetic object."""

    def __init__(self, index: int, cfg: SynthConfig, rng: np.random.Generator) -> None:
        width = cfg.frame_size[1]
        self.index = index
        self.class_name = str(cfg.classes[int(rng.integers(len(cfg.classes)))])
        self.width = int(rng.integers(cfg.object_width[0], cfg.object_width[1] + 1))
        self.top = index * cfg.lane_height
        speed = int(rng.integers(cfg.velocity[0], cfg.velocity[1] + 1))
        velocity = speed if rng.random() < 0.5 else -speed
        x = int(rng.integers(0, width - self.width + 1))

        self.xs = [x]
        for _ in range(1, cfg.num_frames):
            nxt = x + velocity
            if nxt < 0 or nxt + self.width > width:
                velocity = -velocity
                nxt = x + velocity
                if nxt < 0 or nxt + self.width > width:
                    nxt = x
            x = nxt
            self.xs.append(x)

        self.hidden: set[int] = set()
        if cfg.occlusion_prob > 0 and rng.random() < cfg.occlusion_prob:
            duration = int(rng.integers(cfg.occlusion_duration[0], cfg.occlusion_duration[1] + 1))
            # keep at least one visible frame on each side of the gap
            last_start = cfg.num_frames - duration - 1
            if last_start >= 1:
                start = int(rng.integers(1, last_start + 1))
                self.hidden = set(range(start, start + duration))

    def rows(self, cfg: SynthConfig) -> slice:
        return slice(self.top, self.top + cfg.object_height)

    def cols(self, t: int) -> slice:
        return slice(self.xs[t], self.xs[t] + self.width)


def _oracle_embedding(
    index: int, dim: int, sigma: float, rng: np.random.Generator
) -> tuple[float, ...]:
    vec = np.zeros(dim)
    vec[index] = 1.0
    if sigma > 0:
        vec = vec + rng.normal(0.0, sigma, size=dim)
    return tuple(float(x) for x in vec / np.linalg.norm(vec))


def _backward_flow(objects: list[_Object], t: int, cfg: SynthConfig) -> FlowField:
    height, width = cfg.frame_size
    vectors = np.zeros((height, width, 2))
    uu = np.broadcast_to(np.arange(width), (height, width))
    for obj in objects:
        rows = obj.rows(cfg)
        before = np.zeros(width, dtype=bool)
        before[obj.cols(t - 1)] = True
        now = np.zeros(width, dtype=bool)
        now[obj.cols(t)] = True
        uncovered = before & ~now
        vectors[rows, uncovered, 0] = -(uu[rows, uncovered] + 1)
        vectors[rows, now, 0] = obj.xs[t - 1] - obj.xs[t]
    return FlowField(vectors=vectors)


def synth_generate(cfg: SynthConfig) -> SequenceBundle:
    """Generate a labeled sequence; identical configs give identical bundles."""
    rng = np.random.default_rng(cfg.seed)
    height, width = cfg.frame_size
    objects = [_Object(i, cfg, rng) for i in range(cfg.num_objects)]

    frames: list[list[Segment]] = []
    next_id = 0
    for t in range(cfg.num_frames):
        frame: list[Segment] = []
        for obj in objects:
            if t in obj.hidden:
                continue
            grid = np.zeros((height, width), dtype=bool)
            grid[obj.rows(cfg), obj.cols(t)] = True
            mask = Mask.from_array(grid)
            frame.append(
                Segment(
                    id=next_id,
                    frame=t,
                    class_name=obj.class_name,
                    mask=mask,
                    box=mask_bbox(mask),
                    score=float(rng.uniform(0.5, 1.0)),
                    embedding=_oracle_embedding(obj.index, cfg.num_objects, cfg.embedding_sigma, rng),
                    gt_track=obj.index,
                )
            )
            next_id += 1
        frames.append(frame)

    flows = [_backward_flow(objects, t, cfg) for t in range(1, cfg.num_frames)]
    hidden = sum(len(obj.hidden) for obj in objects)
    logger.info(
        f"Generated {cfg.name}: {cfg.num_objects} objects, {cfg.num_frames} frames, "
        f"{next_id} segments, {hidden} occluded detections"
    )
    return SequenceBundle(name=cfg.name, frame_size=cfg.frame_size, frames=frames, flows=flows)
