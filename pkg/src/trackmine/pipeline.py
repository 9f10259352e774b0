"""Library-usable pipeline functions.

Each function corresponds to a CLI command but takes explicit parameters
instead of reading from config/CLI args. Use these from notebooks or
scripts when trackmine is used as a library.
"""

import asyncio
import logging
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import TypeVar

import numpy as np
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn

from trackmine.embedding import (
    Denominator,
    LossBatch,
    batch_hard_triplet_loss,
    majority_tracklet_filter,
    sample_training_window,
)
from trackmine.io.models import SequenceBundle
from trackmine.io.report import write_report
from trackmine.io.sequence import load_sequence, write_sequence
from trackmine.io.tracks import load_tracks, write_tracks
from trackmine.metrics.evaluate import evaluate_sequence
from trackmine.metrics.models import EvalMode, IdSwitchRule, MetricsReport
from trackmine.synth import SynthConfig, synth_generate
from trackmine.tracking.linker import link_sequence
from trackmine.tracking.miner import mine_sequence, tracklet_tracks
from trackmine.tracking.models import LinkerConfig, MinerConfig, Track

logger = logging.getLogger(__name__)

T = TypeVar("T")

TRACKS_SUFFIX = ".tracks.jsonl"


def mine_bundle(bundle: SequenceBundle, cfg: MinerConfig | None = None) -> list[Track]:
    """Mine tracklets of an in-memory bundle (flows required)."""
    if bundle.flows is None and bundle.num_frames > 1:
        raise ValueError(f"Sequence {bundle.name} has no flows; mining needs backward flow")
    return tracklet_tracks(mine_sequence(bundle.mining_input(), cfg))


def link_bundle(bundle: SequenceBundle, cfg: LinkerConfig | None = None) -> list[Track]:
    return link_sequence(bundle.frames, cfg)


def run_mine(seq_dir: Path, output_path: Path, cfg: MinerConfig | None = None) -> list[Track]:
    """Mine tracklets of a sequence directory and write them as a tracks file.

    Args:
        seq_dir: Sequence directory with detections.jsonl and flow/
        output_path: Where to write the tracks file
        cfg: Mining thresholds (defaults if None)

    Returns:
        Mined tracklets, dense ids in first-appearance order
    """
    bundle = load_sequence(seq_dir, require_flow=True)
    tracks = mine_bundle(bundle, cfg)
    write_tracks(bundle, tracks, output_path)
    return tracks


def run_link(seq_dir: Path, output_path: Path, cfg: LinkerConfig | None = None) -> list[Track]:
    """Link detections (with embeddings) of a sequence directory into tracks.

    Args:
        seq_dir: Sequence directory with detections.jsonl
        output_path: Where to write the tracks file
        cfg: Linking parameters (defaults if None)

    Returns:
        Tracks of at least ``cfg.min_track`` segments
    """
    bundle = load_sequence(seq_dir)
    tracks = link_bundle(bundle, cfg)
    write_tracks(bundle, tracks, output_path)
    return tracks


def run_eval(
    gt_dir: Path,
    tracks_path: Path,
    mode: EvalMode = "mots",
    id_switch_rule: IdSwitchRule = "last_known",
    detections_dir: Path | None = None,
    output_path: Path | None = None,
) -> MetricsReport:
    """Evaluate a tracks file against the ``gt_track`` labels of a sequence.

    Args:
        gt_dir: Sequence directory whose detections carry gt_track labels
        tracks_path: Tracks file to evaluate
        mode: "mots" (mask IoU) or "mot" (box IoU)
        id_switch_rule: "last_known" or "previous_frame"
        detections_dir: Sequence the tracks refer to (defaults to gt_dir)
        output_path: Where to write the report JSON (skipped if None)
    """
    gt_bundle = load_sequence(gt_dir)
    pred_bundle = load_sequence(detections_dir) if detections_dir is not None else gt_bundle
    tracks = load_tracks(tracks_path, pred_bundle)
    report = evaluate_sequence(
        gt_bundle.gt_annotations(),
        pred_bundle.track_annotations(tracks),
        mode=mode,
        id_switch_rule=id_switch_rule,
    )
    if output_path is not None:
        write_report(report, output_path)
    return report


def run_synth(cfg: SynthConfig, output_dir: Path) -> SequenceBundle:
    """Generate a synthetic sequence and write it as a sequence directory."""
    bundle = synth_generate(cfg)
    write_sequence(bundle, output_dir)
    return bundle


def label_with_tracklets(bundle: SequenceBundle, tracks: Sequence[Track]) -> SequenceBundle:
    """Replace ``gt_track`` labels by track ids; unassigned segments lose their label."""
    labels: dict[int, int | None] = {sid: trk.id for trk in tracks for sid in trk.segments}
    return bundle.with_labels(labels)


def run_triplet_loss(
    bundle: SequenceBundle,
    window_len: int,
    margin: float,
    rng: np.random.Generator,
    denominator: Denominator = "valid",
) -> float:
    """Batch-hard triplet loss of one training window of mined tracklets.

    The bundle is relabeled with its mined tracklets, a window is sampled,
    tracklets seen in at most half of its frames are dropped, and the loss
    is evaluated on the remaining embeddings.
    """
    labeled = label_with_tracklets(bundle, mine_bundle(bundle))
    window = sample_training_window(labeled.frames, window_len, rng)
    kept = majority_tracklet_filter(window, window_len)
    loss = batch_hard_triplet_loss(LossBatch.from_segments(kept), margin, denominator)
    logger.info(f"Triplet loss over {len(kept)}/{len(window)} window segments: {loss:.6f}")
    return loss


def tracks_output_path(output_dir: Path, seq_dir: Path) -> Path:
    return output_dir / f"{Path(seq_dir).name}{TRACKS_SUFFIX}"


async def _arun_many(
    items: Sequence[Path],
    fn: Callable[[Path], T],
    jobs: int,
    description: str,
) -> list[T]:
    """Run ``fn`` on every item in worker threads, at most ``jobs`` at a time.

    Results come back in input order.
    """
    sem = asyncio.Semaphore(jobs)
    completed = 0

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
    ) as progress:
        ptask = progress.add_task(description, total=len(items))

        async def _bounded(item: Path) -> T:
            nonlocal completed
            async with sem:
                result = await asyncio.to_thread(fn, item)
                completed += 1
                progress.update(ptask, completed=completed)
                return result

        return list(await asyncio.gather(*[_bounded(item) for item in items]))


def run_mine_many(
    seq_dirs: Sequence[Path],
    output_dir: Path,
    cfg: MinerConfig | None = None,
    jobs: int = 1,
) -> list[list[Track]]:
    """Mine several sequences concurrently; writes ``<name>.tracks.jsonl`` per sequence."""
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    return asyncio.run(
        _arun_many(
            seq_dirs,
            lambda d: run_mine(d, tracks_output_path(output_dir, d), cfg),
            jobs,
            "Mining...",
        )
    )


def run_link_many(
    seq_dirs: Sequence[Path],
    output_dir: Path,
    cfg: LinkerConfig | None = None,
    jobs: int = 1,
) -> list[list[Track]]:
    """Link several sequences concurrently; writes ``<name>.tracks.jsonl`` per sequence."""
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    return asyncio.run(
        _arun_many(
            seq_dirs,
            lambda d: run_link(d, tracks_output_path(output_dir, d), cfg),
            jobs,
            "Linking...",
        )
    )
