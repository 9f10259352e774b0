"""Tests for the synthetic sequence generator."""

import pytest
from pydantic import ValidationError

from trackmine.masks import mask_iou, warp_mask
from trackmine.pipeline import mine_bundle
from trackmine.synth import SynthConfig, synth_generate


class TestSynthConfig:
    """Test SynthConfig validation."""

    def test_seed_required(self):
        """There is no default seed."""
        with pytest.raises(ValidationError):
            SynthConfig()

    def test_lanes_must_fit(self):
        """Each object needs at least one row."""
        with pytest.raises(ValidationError, match="lanes"):
            SynthConfig(seed=0, num_objects=5, frame_size=(4, 40))

    def test_width_range(self):
        """Objects must fit horizontally."""
        with pytest.raises(ValidationError, match="object_width"):
            SynthConfig(seed=0, frame_size=(30, 10), object_width=(6, 16))

    def test_negative_sigma(self):
        """Noise levels are non-negative."""
        with pytest.raises(ValidationError):
            SynthConfig(seed=0, embedding_sigma=-0.1)

    def test_lane_geometry(self):
        """Objects leave one background row per lane."""
        cfg = SynthConfig(seed=0, num_objects=4, frame_size=(40, 50))
        assert cfg.lane_height == 10
        assert cfg.object_height == 9


class TestSynthGenerate:
    """Test synth_generate."""

    def test_deterministic(self):
        """The same seed gives identical bundles."""
        cfg = SynthConfig(seed=42, occlusion_prob=0.5, embedding_sigma=0.1)
        a = synth_generate(cfg)
        b = synth_generate(cfg)
        assert a.frames == b.frames
        assert a.flows == b.flows

    def test_seeds_differ(self):
        """Different seeds give different sequences."""
        a = synth_generate(SynthConfig(seed=1))
        b = synth_generate(SynthConfig(seed=2))
        assert a.frames != b.frames

    def test_shape(self, synth_bundle):
        """Frame count, flow count and ids follow the config."""
        assert synth_bundle.num_frames == 10
        assert len(synth_bundle.flows) == 9
        assert synth_bundle.num_segments == 30
        assert [s.id for s in synth_bundle.segments] == list(range(30))
        assert synth_bundle.has_embeddings

    def test_ids_dense_in_frame_order(self, synth_bundle):
        """Segment ids grow with the frame index."""
        frames = [s.frame for s in synth_bundle.segments]
        assert frames == sorted(frames)

    def test_oracle_embeddings(self, synth_bundle):
        """Without noise each embedding is the one-hot of its object."""
        for seg in synth_bundle.segments:
            expected = [0.0] * 3
            expected[seg.gt_track] = 1.0
            assert list(seg.embedding) == expected

    def test_masks_disjoint(self, synth_bundle):
        """Objects never overlap within a frame."""
        for frame in synth_bundle.frames:
            for i, a in enumerate(frame):
                for b in frame[i + 1 :]:
                    assert mask_iou(a.mask, b.mask) == 0.0

    def test_flow_is_exact(self, synth_bundle):
        """Warping an object's mask by the generated flow reproduces its next mask."""
        for t in range(1, synth_bundle.num_frames):
            flow = synth_bundle.flow_for(t)
            previous = {s.gt_track: s for s in synth_bundle.frames[t - 1]}
            for seg in synth_bundle.frames[t]:
                assert warp_mask(previous[seg.gt_track].mask, flow) == seg.mask

    def test_occlusion_removes_detections(self):
        """Occluded objects skip a contiguous run of inner frames."""
        cfg = SynthConfig(seed=4, num_objects=3, num_frames=12, occlusion_prob=1.0, occlusion_duration=(3, 3))
        bundle = synth_generate(cfg)
        for obj in range(3):
            frames = [s.frame for s in bundle.segments if s.gt_track == obj]
            assert len(frames) == 9
            assert frames[0] == 0
            assert frames[-1] == 11
            gaps = [b - a for a, b in zip(frames, frames[1:], strict=False)]
            assert sorted(gaps)[-1] == 4

    def test_noisy_embeddings_normalised(self):
        """Noisy embeddings stay unit length."""
        bundle = synth_generate(SynthConfig(seed=9, embedding_sigma=0.3))
        for seg in bundle.segments:
            assert sum(x * x for x in seg.embedding) == pytest.approx(1.0)

    def test_single_object_mines_to_ground_truth(self):
        """A lone noise-free object is mined as one tracklet covering every frame."""
        bundle = synth_generate(SynthConfig(seed=0, num_objects=1, num_frames=5))
        tracks = mine_bundle(bundle)
        assert len(tracks) == 1
        assert tracks[0].segments == [s.id for s in bundle.segments]
