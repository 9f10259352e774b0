"""CLI interface for trackmine."""

import json
import logging
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import click
import typer
import yaml
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from trackmine.config import TrackmineConfig
from trackmine.tracking.models import Track

app = typer.Typer(
    name="trackmine",
    help="Tracklet mining, track linking and MOTS evaluation",
    add_completion=True,
    rich_markup_mode="rich",
)

console = Console()


def _setup_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Configure logging level; ``quiet`` keeps machine-readable output clean."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(levelname)s: %(message)s",
        force=True,
    )


@contextmanager
def _exit_on_error() -> Iterator[None]:
    """Validation errors exit with 1, I/O errors with 2."""
    try:
        yield
    except OSError as e:
        console.print(f"[red]Error:[/red] {escape(str(e))}")
        raise typer.Exit(2) from None
    except ValueError as e:
        console.print(f"[red]Error:[/red] {escape(str(e))}")
        raise typer.Exit(1) from None


def _check_dirs(seq_dirs: list[str]) -> list[Path]:
    paths = [Path(d) for d in seq_dirs]
    for p in paths:
        if not p.is_dir():
            raise FileNotFoundError(f"Not a sequence directory: {p}")
    names = [p.name for p in paths]
    if len(set(names)) != len(names):
        raise ValueError(f"Sequence directory names must be unique: {', '.join(names)}")
    return paths


def _print_track_summary(title: str, seq_dirs: list[Path], results: list[list[Track]]) -> None:
    table = Table(title=title, show_header=True, header_style="bold cyan")
    table.add_column("Sequence", style="dim")
    table.add_column("Tracks", justify="right")
    table.add_column("Segments", justify="right")
    table.add_column("Mean length", justify="right")
    for seq_dir, tracks in zip(seq_dirs, results, strict=True):
        segments = sum(len(t) for t in tracks)
        mean = segments / len(tracks) if tracks else 0.0
        table.add_row(seq_dir.name, str(len(tracks)), str(segments), f"{mean:.1f}")
    console.print(table)


# ============================================================================
# Pipeline Commands
# ============================================================================


@app.command()
def mine(
    sequences: list[str] = typer.Argument(..., help="Sequence directories (detections + flow/)"),
    tau0: float | None = typer.Option(None, "--tau0", help="Minimum margin b1 - b2 (pixels)"),
    tau1: float | None = typer.Option(None, "--tau1", help="Minimum overlap b1 (pixels)"),
    tau2: float | None = typer.Option(None, "--tau2", help="Minimum ratio b1 / r"),
    config_file: str | None = typer.Option(None, "--config", help="Config YAML file"),
    jobs: int | None = typer.Option(None, "-j", "--jobs", help="Sequences processed concurrently"),
    output: str | None = typer.Option(None, "-o", help="Output directory for tracks files"),
    verbose: bool = typer.Option(False, "-v", "--verbose", help="Verbose logging"),
) -> None:
    """Mine tracklets from detections and backward flow."""
    _setup_logging(verbose)
    from trackmine.pipeline import run_mine_many

    with _exit_on_error():
        config = TrackmineConfig.from_file(
            Path(config_file) if config_file else None, tau0=tau0, tau1=tau1, tau2=tau2, jobs=jobs
        )
        output_dir = Path(output) if output else config.output_dir
        seq_dirs = _check_dirs(sequences)
        results = run_mine_many(seq_dirs, output_dir, config.miner_config(), jobs=config.jobs)

    _print_track_summary("Mined Tracklets", seq_dirs, results)
    console.print(f"[green]Tracks written to[/green] {output_dir}")


@app.command()
def link(
    sequences: list[str] = typer.Argument(..., help="Sequence directories (detections with embeddings)"),
    tau: float | None = typer.Option(None, "--tau", help="Maximum dissimilarity of a link"),
    window: int | None = typer.Option(None, "--window", help="Frames a track may be occluded"),
    min_track: int | None = typer.Option(None, "--min-track", help="Minimum segments per track"),
    terms: str | None = typer.Option(
        None, "--terms", help="Payoff terms, comma-separated subset of siou,embedding,time"
    ),
    config_file: str | None = typer.Option(None, "--config", help="Config YAML file"),
    jobs: int | None = typer.Option(None, "-j", "--jobs", help="Sequences processed concurrently"),
    output: str | None = typer.Option(None, "-o", help="Output directory for tracks files"),
    verbose: bool = typer.Option(False, "-v", "--verbose", help="Verbose logging"),
) -> None:
    """Link detections into tracks using embeddings, time and sIoU."""
    _setup_logging(verbose)
    from trackmine.pipeline import run_link_many

    with _exit_on_error():
        config = TrackmineConfig.from_file(
            Path(config_file) if config_file else None,
            tau=tau,
            window=window,
            min_track=min_track,
            terms=terms,
            jobs=jobs,
        )
        output_dir = Path(output) if output else config.output_dir
        seq_dirs = _check_dirs(sequences)
        results = run_link_many(seq_dirs, output_dir, config.linker_config(), jobs=config.jobs)

    _print_track_summary("Linked Tracks", seq_dirs, results)
    console.print(f"[green]Tracks written to[/green] {output_dir}")


@app.command(name="eval")
def evaluate(
    gt_sequence: str = typer.Argument(..., help="Sequence directory with gt_track labels"),
    tracks: str = typer.Argument(..., help="Tracks file to evaluate"),
    detections: str | None = typer.Option(
        None, "--detections", help="Sequence the tracks refer to (defaults to the gt sequence)"
    ),
    mode: str = typer.Option(
        "mots", "--mode", help="Mask (mots) or box (mot) matching", click_type=click.Choice(["mots", "mot"])
    ),
    id_switch_rule: str = typer.Option(
        "last_known",
        "--ids-rule",
        help="Reference match for identity switches",
        click_type=click.Choice(["last_known", "previous_frame"]),
    ),
    to_stdout: bool = typer.Option(False, "--stdout", help="Also print the report JSON"),
    output: str | None = typer.Option(None, "-o", help="Report path (default: <output>/report.json)"),
    verbose: bool = typer.Option(False, "-v", "--verbose", help="Verbose logging"),
) -> None:
    """Evaluate tracks against ground truth (MOTSA / sMOTSA / MOTSP or MOTA / MOTP)."""
    _setup_logging(verbose, quiet=to_stdout)
    from trackmine.io.report import report_json
    from trackmine.pipeline import run_eval

    with _exit_on_error():
        report_path = Path(output) if output else TrackmineConfig().output_dir / "report.json"
        report = run_eval(
            Path(gt_sequence),
            Path(tracks),
            mode=mode,  # type: ignore[arg-type]
            id_switch_rule=id_switch_rule,  # type: ignore[arg-type]
            detections_dir=Path(detections) if detections else None,
            output_path=report_path,
        )

    if to_stdout:
        print(report_json(report), end="")
        raise typer.Exit(0)

    names = ("MOTSA", "sMOTSA", "MOTSP") if mode == "mots" else ("MOTA", "MOTP")
    table = Table(title=f"Evaluation ({mode})", show_header=True, header_style="bold cyan")
    table.add_column("Class", style="dim")
    for name in (*names, "TP", "FP", "FN", "IDS"):
        table.add_column(name, justify="right")

    def _row(label: str, metrics: Any) -> None:
        values = [getattr(metrics, n.lower()) for n in names]
        t = metrics.totals
        table.add_row(
            label,
            *("n/a" if v is None else f"{v:.4f}" for v in values),
            str(t.tp),
            str(t.fp),
            str(t.fn),
            str(t.ids),
        )

    for cls, metrics in report.classes.items():
        _row(cls, metrics)
    _row("[bold]all[/bold]", report.overall)
    console.print(table)
    console.print(f"[green]Report written to[/green] {report_path}")


@app.command()
def synth(
    output: str = typer.Argument(..., help="Sequence directory to create"),
    params: str | None = typer.Option(None, "--params", help="YAML file of generator parameters"),
    seed: int | None = typer.Option(None, "--seed", help="Random seed (required here or in --params)"),
    name: str | None = typer.Option(None, "--name", help="Sequence name"),
    objects: int | None = typer.Option(None, "--objects", help="Number of objects"),
    frames: int | None = typer.Option(None, "--frames", help="Number of frames"),
    height: int | None = typer.Option(None, "--height", help="Frame height in pixels"),
    width: int | None = typer.Option(None, "--width", help="Frame width in pixels"),
    occlusion_prob: float | None = typer.Option(
        None, "--occlusion-prob", help="Probability that an object is occluded once"
    ),
    occlusion_length: int | None = typer.Option(
        None, "--occlusion-length", help="Occlusion length in frames"
    ),
    sigma: float | None = typer.Option(None, "--sigma", help="Embedding noise standard deviation"),
    verbose: bool = typer.Option(False, "-v", "--verbose", help="Verbose logging"),
) -> None:
    """Generate a synthetic sequence with ground-truth tracks and exact flow."""
    _setup_logging(verbose)
    from trackmine.pipeline import run_synth
    from trackmine.synth import SynthConfig

    with _exit_on_error():
        values: dict[str, Any] = {}
        if params:
            try:
                raw = yaml.safe_load(Path(params).read_text()) or {}
            except yaml.YAMLError as e:
                raise ValueError(f"{params}: invalid YAML: {e}") from None
            if not isinstance(raw, dict):
                raise ValueError(f"{params}: generator parameters must be a mapping")
            values.update(raw)
        overrides: dict[str, Any] = {
            "seed": seed,
            "name": name,
            "num_objects": objects,
            "num_frames": frames,
            "occlusion_prob": occlusion_prob,
            "embedding_sigma": sigma,
        }
        if occlusion_length is not None:
            overrides["occlusion_duration"] = (occlusion_length, occlusion_length)
        if height is not None or width is not None:
            h, w = values.get("frame_size", SynthConfig.model_fields["frame_size"].default)
            overrides["frame_size"] = (height or h, width or w)
        values.update({k: v for k, v in overrides.items() if v is not None})
        values.setdefault("name", Path(output).name)
        bundle = run_synth(SynthConfig(**values), Path(output))

    console.print(
        f"[green]Generated[/green] {bundle.name}: {bundle.num_frames} frames, "
        f"{bundle.num_segments} segments -> {output}"
    )


@app.command()
def loss(
    sequence: str = typer.Argument(..., help="Sequence directory (detections with embeddings + flow/)"),
    seed: int = typer.Option(..., "--seed", help="Seed for the window offset"),
    window_len: int | None = typer.Option(
        None, "--window-len", help="Training window in frames (default: linking window)"
    ),
    margin: float | None = typer.Option(None, "--margin", help="Triplet margin beta"),
    denominator: str = typer.Option(
        "valid",
        "--denominator",
        help="Average over valid anchors or the whole batch",
        click_type=click.Choice(["valid", "batch"]),
    ),
    config_file: str | None = typer.Option(None, "--config", help="Config YAML file"),
) -> None:
    """Batch-hard triplet loss of one window, labeled with mined tracklets."""
    _setup_logging(quiet=True)
    import numpy as np

    from trackmine.io.sequence import load_sequence
    from trackmine.pipeline import run_triplet_loss

    with _exit_on_error():
        config = TrackmineConfig.from_file(
            Path(config_file) if config_file else None, triplet_margin=margin
        )
        bundle = load_sequence(Path(sequence), require_flow=True)
        value = run_triplet_loss(
            bundle,
            window_len if window_len is not None else config.window,
            config.triplet_margin,
            np.random.default_rng(seed),
            denominator=denominator,  # type: ignore[arg-type]
        )
    print(repr(value))


@app.command(context_settings={"ignore_unknown_options": True})
def siou(
    coords: list[float] = typer.Argument(..., help="Two boxes: u1 v1 u2 v2 u1 v1 u2 v2"),
) -> None:
    """Signed IoU of two boxes."""
    _setup_logging(quiet=True)
    from trackmine.masks.models import BBox
    from trackmine.tracking.linker import siou as signed_iou

    if len(coords) != 8:
        console.print(f"[red]Error:[/red] Expected 8 coordinates, got {len(coords)}")
        raise typer.Exit(1)
    value = signed_iou(BBox.from_list(coords[:4]), BBox.from_list(coords[4:]))
    print(repr(value))


@app.command()
def info(
    sequence: str = typer.Argument(..., help="Sequence directory"),
    as_json: bool = typer.Option(False, "--json", help="Output as JSON"),
) -> None:
    """Summarise a sequence directory."""
    _setup_logging(quiet=as_json)
    from trackmine.io.sequence import load_sequence

    with _exit_on_error():
        bundle = load_sequence(Path(sequence))

    per_class: dict[str, int] = {}
    for seg in bundle.segments:
        per_class[seg.class_name] = per_class.get(seg.class_name, 0) + 1
    gt = bundle.gt_tracks
    data: dict[str, Any] = {
        "name": bundle.name,
        "frame_size": list(bundle.frame_size),
        "frames": bundle.num_frames,
        "segments": bundle.num_segments,
        "classes": per_class,
        "flows": len(bundle.flows) if bundle.flows is not None else 0,
        "embeddings": bundle.has_embeddings,
        "gt_tracks": len(set(gt.values())) if gt else 0,
    }

    if as_json:
        print(json.dumps(data, indent=2))
        raise typer.Exit(0)

    table = Table(title="Sequence Info", show_header=True, header_style="bold cyan")
    table.add_column("Metric", style="dim")
    table.add_column("Value")
    table.add_row("Name", bundle.name)
    table.add_row("Frame Size", f"{bundle.frame_size[0]} x {bundle.frame_size[1]}")
    table.add_row("Frames", str(bundle.num_frames))
    table.add_row("Segments", str(bundle.num_segments))
    table.add_row("Classes", ", ".join(f"{c} ({n})" for c, n in sorted(per_class.items())) or "-")
    table.add_row("Flows", str(data["flows"]))
    table.add_row("Embeddings", "Yes" if bundle.has_embeddings else "No")
    table.add_row("Ground-truth Tracks", str(data["gt_tracks"]))
    console.print(table)
    raise typer.Exit(0)
