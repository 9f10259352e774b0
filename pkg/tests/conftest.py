"""Shared test fixtures for trackmine."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from trackmine.io.models import SequenceBundle
from trackmine.io.sequence import write_sequence
from trackmine.masks.models import Mask
from trackmine.masks.rle import mask_bbox
from trackmine.synth import SynthConfig, synth_generate
from trackmine.tracking.models import Segment


def _rect_mask(size: tuple[int, int], top: int, left: int, height: int, width: int) -> Mask:
    grid = np.zeros(size, dtype=bool)
    grid[top : top + height, left : left + width] = True
    return Mask.from_array(grid)


@pytest.fixture
def rect_mask():
    """Factory: rectangular mask of ``height`` x ``width`` at (top, left)."""
    return _rect_mask


@pytest.fixture
def make_segment():
    """Factory for segments with a rectangular mask and matching box."""

    def _make(
        seg_id: int,
        frame: int,
        rect: tuple[int, int, int, int] = (0, 0, 2, 2),
        size: tuple[int, int] = (8, 8),
        class_name: str = "car",
        embedding: list[float] | None = None,
        gt_track: int | None = None,
        score: float = 1.0,
    ) -> Segment:
        mask = _rect_mask(size, *rect)
        return Segment(
            id=seg_id,
            frame=frame,
            class_name=class_name,
            mask=mask,
            box=mask_bbox(mask),
            score=score,
            embedding=tuple(embedding) if embedding is not None else None,
            gt_track=gt_track,
        )

    return _make


@pytest.fixture
def synth_bundle() -> SequenceBundle:
    """Small noise-free synthetic sequence: 3 objects, 10 frames."""
    return synth_generate(SynthConfig(seed=7, num_objects=3, num_frames=10, frame_size=(30, 40)))


@pytest.fixture
def tmp_dir():
    """Temporary directory that cleans up after test."""
    with tempfile.TemporaryDirectory() as d:
        yield Path(d)


@pytest.fixture
def seq_dir(tmp_dir, synth_bundle) -> Path:
    """The synthetic bundle written as a sequence directory."""
    path = tmp_dir / "seq0"
    write_sequence(synth_bundle, path)
    return path
