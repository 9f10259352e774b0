"""Tests for the library-level pipeline functions."""

import math

import numpy as np
import pytest

from trackmine.errors import FormatError
from trackmine.io import load_report, load_sequence, load_tracks, write_tracks
from trackmine.pipeline import (
    label_with_tracklets,
    link_bundle,
    mine_bundle,
    run_eval,
    run_link,
    run_mine,
    run_link_many,
    run_mine_many,
    run_synth,
    run_triplet_loss,
    tracks_output_path,
)
from trackmine.synth import SynthConfig, synth_generate


class TestMineAndLink:
    """Test mine_bundle / link_bundle and their file-based wrappers."""

    def test_mine_bundle_recovers_objects(self, synth_bundle):
        """Each synthetic object becomes one tracklet."""
        tracks = mine_bundle(synth_bundle)
        assert len(tracks) == 3
        assert all(len(t) == 10 for t in tracks)

    def test_mine_bundle_needs_flow(self, synth_bundle):
        """A multi-frame bundle without flows cannot be mined."""
        bare = synth_bundle.model_copy(update={"flows": None})
        with pytest.raises(ValueError, match="no flows"):
            mine_bundle(bare)

    def test_link_bundle(self, synth_bundle):
        """Oracle embeddings link each object across the sequence."""
        tracks = link_bundle(synth_bundle)
        assert sorted(len(t) for t in tracks) == [10, 10, 10]

    def test_run_mine_writes_file(self, seq_dir, tmp_dir):
        """run_mine writes a tracks file that loads back to the same tracks."""
        out = tmp_dir / "out" / "seq0.tracks.jsonl"
        tracks = run_mine(seq_dir, out)
        assert load_tracks(out, load_sequence(seq_dir)) == tracks

    def test_run_mine_missing_flow(self, tmp_dir):
        """Mining from disk requires flow files."""
        seq = tmp_dir / "noflow"
        run_synth(SynthConfig(seed=1, num_frames=3), seq)
        for f in (seq / "flow").iterdir():
            f.unlink()
        with pytest.raises(FormatError):
            run_mine(seq, tmp_dir / "t.jsonl")

    def test_run_link_writes_file(self, seq_dir, tmp_dir):
        """run_link writes its tracks."""
        out = tmp_dir / "linked.jsonl"
        tracks = run_link(seq_dir, out)
        assert len(load_tracks(out, load_sequence(seq_dir))) == len(tracks) == 3


class TestRunMany:
    """Test the concurrent multi-sequence runners."""

    def test_order_preserved(self, tmp_dir):
        """Results line up with the input directories."""
        dirs = []
        for i, n in enumerate((1, 2, 3)):
            d = tmp_dir / f"seq{i}"
            run_synth(SynthConfig(seed=i, num_objects=n, num_frames=5), d)
            dirs.append(d)
        out = tmp_dir / "out"
        results = run_mine_many(dirs, out, jobs=2)
        assert [len(r) for r in results] == [1, 2, 3]
        for d in dirs:
            assert tracks_output_path(out, d).exists()

    def test_link_many(self, seq_dir, tmp_dir):
        """Linking several sequences writes one file each."""
        results = run_link_many([seq_dir], tmp_dir / "out", jobs=1)
        assert len(results) == 1
        assert (tmp_dir / "out" / "seq0.tracks.jsonl").exists()

    @pytest.mark.parametrize("runner", [run_mine_many, run_link_many])
    def test_jobs_positive(self, runner, seq_dir, tmp_dir):
        """jobs must be at least one."""
        with pytest.raises(ValueError, match="jobs"):
            runner([seq_dir], tmp_dir, jobs=0)

    def test_output_path(self, tmp_dir):
        """Tracks files are named after the sequence directory."""
        assert tracks_output_path(tmp_dir, tmp_dir / "a" / "seq") == tmp_dir / "seq.tracks.jsonl"


class TestRunEval:
    """Test run_eval."""

    def test_perfect_tracks(self, seq_dir, tmp_dir):
        """Mined tracks of a noise-free sequence score 1."""
        tracks_path = tmp_dir / "t.jsonl"
        run_mine(seq_dir, tracks_path)
        report_path = tmp_dir / "report.json"
        report = run_eval(seq_dir, tracks_path, output_path=report_path)
        assert report.overall.motsa == 1.0
        assert report.overall.totals.ids == 0
        assert report.num_frames == 10
        assert load_report(report_path) == report

    def test_mot_mode(self, seq_dir, tmp_dir):
        """Box mode fills MOTA and MOTP."""
        tracks_path = tmp_dir / "t.jsonl"
        run_mine(seq_dir, tracks_path)
        report = run_eval(seq_dir, tracks_path, mode="mot")
        assert report.mode == "mot"
        assert report.overall.mota == 1.0
        assert report.overall.motp == 1.0

    def test_empty_tracks(self, seq_dir, synth_bundle, tmp_dir):
        """No tracks: every ground-truth object is missed."""
        tracks_path = tmp_dir / "empty.jsonl"
        write_tracks(synth_bundle, [], tracks_path)
        report = run_eval(seq_dir, tracks_path)
        assert report.overall.totals.fn == 30
        assert report.overall.motsa == 0.0


class TestTrainingHelpers:
    """Test label_with_tracklets and run_triplet_loss."""

    def test_labels_follow_tracklets(self, synth_bundle):
        """Segments of one object share a tracklet label."""
        tracks = mine_bundle(synth_bundle)
        labeled = label_with_tracklets(synth_bundle, tracks)
        by_object: dict[int, set[int | None]] = {}
        for old, new in zip(synth_bundle.segments, labeled.segments, strict=True):
            by_object.setdefault(old.gt_track, set()).add(new.gt_track)
        assert all(len(labels) == 1 for labels in by_object.values())
        assert len({next(iter(v)) for v in by_object.values()}) == 3

    def test_unassigned_lose_label(self, synth_bundle):
        """Segments outside every track get no label."""
        labeled = label_with_tracklets(synth_bundle, [])
        assert all(s.gt_track is None for s in labeled.segments)

    def test_oracle_embeddings_zero_loss(self, synth_bundle):
        """One-hot embeddings already separate objects by more than the margin."""
        loss = run_triplet_loss(synth_bundle, 4, 0.2, np.random.default_rng(0))
        assert loss == 0.0

    def test_noisy_embeddings(self):
        """Noisy embeddings give a finite non-negative loss."""
        bundle = synth_generate(
            SynthConfig(seed=5, num_objects=4, num_frames=12, classes=("car",), embedding_sigma=0.8)
        )
        loss = run_triplet_loss(bundle, 6, 1.0, np.random.default_rng(1), denominator="batch")
        assert math.isfinite(loss)
        assert loss >= 0.0

    def test_window_too_long(self, synth_bundle):
        """The window cannot exceed the sequence."""
        with pytest.raises(ValueError):
            run_triplet_loss(synth_bundle, 11, 0.2, np.random.default_rng(0))


class TestRunSynth:
    """Test run_synth."""

    def test_round_trip(self, tmp_dir):
        """The written directory loads back as the generated bundle."""
        cfg = SynthConfig(seed=2, num_objects=2, num_frames=4, frame_size=(20, 30))
        bundle = run_synth(cfg, tmp_dir / "s")
        loaded = load_sequence(tmp_dir / "s", require_flow=True)
        assert loaded.frames == bundle.frames
        assert loaded.flows == bundle.flows
