"""Sequence directories: ``detections.jsonl``, optional ``meta.json`` and ``flow/``."""

import json
import logging
from pathlib import Path

from pydantic import ValidationError

from trackmine.errors import FormatError
from trackmine.io.atomic import atomic_write_text
from trackmine.io.detections import bundle_from_segments, parse_detections, write_detections
from trackmine.io.flow import load_flow, write_flow
from trackmine.io.models import SequenceBundle, SequenceMeta

logger = logging.getLogger(__name__)

DETECTIONS_FILE = "detections.jsonl"
META_FILE = "meta.json"
FLOW_DIR = "flow"


def flow_path(seq_dir: Path, t: int) -> Path:
    return seq_dir / FLOW_DIR / f"{t:06d}.mfl"


def load_meta(seq_dir: Path) -> SequenceMeta | None:
    path = seq_dir / META_FILE
    if not path.exists():
        return None
    try:
        return SequenceMeta.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise FormatError(f"Invalid meta: {e.errors()[0]['msg']}", path) from None


def load_sequence(seq_dir: Path, require_flow: bool = False) -> SequenceBundle:
    """Load a sequence directory.

    Flows are attached only when a file exists for every frame t >= 1; a
    partial set is an error. ``require_flow`` makes a missing set an error too.
    """
    seq_dir = Path(seq_dir)
    det_path = seq_dir / DETECTIONS_FILE
    if not det_path.exists():
        raise FileNotFoundError(f"No {DETECTIONS_FILE} in {seq_dir}")
    meta = load_meta(seq_dir)
    segments = parse_detections(det_path)
    bundle = bundle_from_segments(
        segments,
        name=meta.name if meta else seq_dir.name,
        frame_size=meta.frame_size if meta else None,
        num_frames=meta.num_frames if meta else None,
    )

    expected = [flow_path(seq_dir, t) for t in range(1, bundle.num_frames)]
    present = [p for p in expected if p.exists()]
    if present and len(present) != len(expected):
        missing = next(p for p in expected if not p.exists())
        raise FormatError(f"Missing flow file {missing.name}", seq_dir / FLOW_DIR)
    if expected and not present and require_flow:
        raise FormatError(f"No flow files for {bundle.num_frames} frames", seq_dir / FLOW_DIR)

    if present:
        flows = [load_flow(p) for p in expected]
        bundle = SequenceBundle(
            name=bundle.name, frame_size=bundle.frame_size, frames=bundle.frames, flows=flows
        )
    elif not expected:
        bundle = bundle.model_copy(update={"flows": []})

    logger.info(
        f"Loaded sequence {bundle.name}: {bundle.num_frames} frames, "
        f"{bundle.num_segments} segments, flows={'yes' if bundle.flows is not None else 'no'}"
    )
    return bundle


def write_sequence(bundle: SequenceBundle, seq_dir: Path) -> None:
    """Write a bundle as a sequence directory (inverse of load_sequence)."""
    seq_dir = Path(seq_dir)
    seq_dir.mkdir(parents=True, exist_ok=True)
    meta = SequenceMeta(name=bundle.name, frame_size=bundle.frame_size, num_frames=bundle.num_frames)
    atomic_write_text(seq_dir / META_FILE, json.dumps(meta.model_dump(mode="json"), indent=2) + "\n")
    write_detections(bundle, seq_dir / DETECTIONS_FILE)
    if bundle.flows is not None:
        for t in range(1, bundle.num_frames):
            write_flow(bundle.flows[t - 1], flow_path(seq_dir, t))
    logger.info(f"Wrote sequence {bundle.name} to {seq_dir}")
