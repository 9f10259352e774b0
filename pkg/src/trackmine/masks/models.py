"""Pydantic models for masks, boxes and flow rasters.

Masks are stored run-length encoded (column-major, uncompressed, leading
0-run) and decoded lazily to a read-only boolean array.
"""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator


class Mask(BaseModel):
    """Binary pixel indicator over an H x W frame.

    ``counts`` alternate 0-runs and 1-runs in column-major order, starting
    with a (possibly empty) 0-run, and sum to H * W.
    """

    model_config = ConfigDict(frozen=True)

    size: tuple[int, int]
    counts: tuple[int, ...]

    _grid: Any = PrivateAttr(default=None)

    @field_validator("size")
    @classmethod
    def validate_size(cls, v: tuple[int, int]) -> tuple[int, int]:
        if v[0] < 0 or v[1] < 0:
            raise ValueError(f"Mask size must be non-negative, got {list(v)}")
        return v

    @model_validator(mode="after")
    def _check_runs(self) -> "Mask":
        if any(c < 0 for c in self.counts):
            raise ValueError("RLE counts must be non-negative")
        total = sum(self.counts)
        expected = self.size[0] * self.size[1]
        if total != expected:
            raise ValueError(
                f"RLE counts sum to {total}, expected {expected} for size {list(self.size)}"
            )
        for i in range(1, len(self.counts) - 1):
            if self.counts[i] == 0 and self.counts[i + 1] == 0:
                raise ValueError(f"RLE has consecutive zero-length runs at index {i}")
        return self

    def canonical_counts(self) -> tuple[int, ...]:
        """Counts with zero-length runs merged away, as ``from_array`` emits them."""
        runs: list[list[int]] = []
        for i, c in enumerate(self.counts):
            if c == 0:
                continue
            if runs and runs[-1][0] == i % 2:
                runs[-1][1] += c
            else:
                runs.append([i % 2, c])
        if not runs:
            return (0,)
        lead = [0] if runs[0][0] == 1 else []
        return tuple(lead + [c for _, c in runs])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mask):
            return NotImplemented
        return self.size == other.size and self.canonical_counts() == other.canonical_counts()

    def __hash__(self) -> int:
        return hash((self.size, self.canonical_counts()))

    @property
    def height(self) -> int:
        return self.size[0]

    @property
    def width(self) -> int:
        return self.size[1]

    @classmethod
    def from_array(cls, grid: np.ndarray) -> "Mask":
        """Encode a 2-D binary array."""
        arr = np.asarray(grid)
        if arr.ndim != 2:
            raise ValueError(f"Mask grid must be 2-D, got shape {arr.shape}")
        flat = arr.astype(bool).ravel(order="F")
        if flat.size == 0:
            counts: list[int] = [0]
        else:
            change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
            bounds = np.concatenate(([0], change, [flat.size]))
            counts = np.diff(bounds).tolist()
            if flat[0]:
                counts.insert(0, 0)
        mask = cls(size=(int(arr.shape[0]), int(arr.shape[1])), counts=tuple(counts))
        cached = arr.astype(bool, copy=True)
        cached.setflags(write=False)
        mask._grid = cached
        return mask

    @classmethod
    def empty(cls, height: int, width: int) -> "Mask":
        return cls(size=(height, width), counts=(height * width,))

    @classmethod
    def from_rle(cls, rle: dict[str, Any]) -> "Mask":
        """Build from the ``{"size": [H, W], "counts": [...]}`` dialect."""
        return cls(size=tuple(rle["size"]), counts=tuple(rle["counts"]))

    def to_rle(self) -> dict[str, list[int]]:
        return {"size": list(self.size), "counts": list(self.counts)}

    def to_array(self) -> np.ndarray:
        """Decode to a read-only (H, W) boolean array."""
        if self._grid is None:
            values = np.arange(len(self.counts)) % 2 == 1
            flat = np.repeat(values, self.counts)
            grid = flat.reshape(self.size, order="F")
            grid.setflags(write=False)
            self._grid = grid
        return self._grid


class BBox(BaseModel):
    """Axis-aligned box, top-left (u1, v1) and bottom-right (u2, v2) corners.

    Degenerate boxes are allowed; a box is empty when u2 <= u1 or v2 <= v1.
    """

    model_config = ConfigDict(frozen=True)

    u1: float
    v1: float
    u2: float
    v2: float

    @classmethod
    def from_list(cls, values: list[float] | tuple[float, ...]) -> "BBox":
        if len(values) != 4:
            raise ValueError(f"bbox needs 4 coordinates, got {len(values)}")
        u1, v1, u2, v2 = (float(x) for x in values)
        return cls(u1=u1, v1=v1, u2=u2, v2=v2)

    def as_list(self) -> list[float]:
        return [self.u1, self.v1, self.u2, self.v2]

    @property
    def is_proper(self) -> bool:
        return self.u2 > self.u1 and self.v2 > self.v1

    @property
    def area(self) -> float:
        """Unsigned area |u2 - u1| * |v2 - v1|."""
        return abs(self.u2 - self.u1) * abs(self.v2 - self.v1)


class FlowField(BaseModel):
    """Dense backward mapping from frame t to frame t-1.

    ``vectors[v, u] = (du, dv)``: pixel (u, v) of frame t corresponds to
    (u + du, v + dv) in frame t-1.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vectors: np.ndarray

    @field_validator("vectors", mode="before")
    @classmethod
    def validate_vectors(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ValueError(f"Flow vectors must have shape (H, W, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Flow vectors must be finite")
        arr.setflags(write=False)
        return arr

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FlowField):
            return NotImplemented
        return np.array_equal(self.vectors, other.vectors)

    __hash__ = None  # type: ignore[assignment]

    @property
    def height(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def width(self) -> int:
        return int(self.vectors.shape[1])

    @classmethod
    def zeros(cls, height: int, width: int) -> "FlowField":
        return cls(vectors=np.zeros((height, width, 2)))

    @classmethod
    def constant(cls, height: int, width: int, du: float, dv: float) -> "FlowField":
        vectors = np.empty((height, width, 2))
        vectors[..., 0] = du
        vectors[..., 1] = dv
        return cls(vectors=vectors)


class IntersectionStats(BaseModel):
    """Largest/second-largest overlap with warped masks and uncovered area."""

    model_config = ConfigDict(frozen=True)

    b1: int = Field(ge=0)
    b2: int = Field(ge=0)
    r: int = Field(ge=0)

    @model_validator(mode="after")
    def _check_order(self) -> "IntersectionStats":
        if self.b2 > self.b1:
            raise ValueError(f"b1 ({self.b1}) must be >= b2 ({self.b2})")
        return self
