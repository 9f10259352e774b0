"""Tests for mask pooling, the batch-hard triplet loss and window sampling."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from trackmine.embedding import (
    FeatureMap,
    LossBatch,
    batch_hard_triplet_loss,
    majority_tracklet_filter,
    mask_pool,
    matching_sets,
    sample_training_window,
    triplet_loss_and_grad,
)
from trackmine.errors import DegenerateInputError, DimensionMismatchError
from trackmine.masks import Mask


def _random_units(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    v = rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _oracle_loss(batch: LossBatch, beta: float) -> float:
    """Definition-level loss: loop over anchors, look up the hardest items."""
    hinges = []
    for a in range(len(batch)):
        matching, non_matching = matching_sets(a, batch)
        if not matching or not non_matching:
            continue
        e = batch.embeddings
        hardest_pos = max(float(np.linalg.norm(e[a] - e[p])) for p in matching)
        hardest_neg = min(float(np.linalg.norm(e[a] - e[q])) for q in non_matching)
        hinges.append(max(hardest_pos - hardest_neg + beta, 0.0))
    return math.fsum(hinges) / len(hinges) if hinges else 0.0


class TestMaskPool:
    """Test mask_pool."""

    def test_constant_map(self, rect_mask):
        """A constant map pools to the constant in every channel."""
        x = FeatureMap(values=np.full((3, 4, 5), 0.3))
        pooled = mask_pool(x, rect_mask((4, 5), 1, 1, 2, 3))
        assert pooled == pytest.approx([0.3, 0.3, 0.3])

    def test_hand_average(self):
        """Values [1, 3] under a full mask average to 2."""
        x = FeatureMap(values=[[[1.0, 3.0]]])
        m = Mask.from_array(np.ones((1, 2), dtype=bool))
        assert mask_pool(x, m).tolist() == [2.0]

    def test_matches_pixel_loop(self):
        """Vectorised pooling equals an explicit pixel loop on dyadic values."""
        rng = np.random.default_rng(0)
        for _ in range(200):
            n, h, w = (int(k) for k in rng.integers(1, 6, size=3))
            values = rng.integers(-64, 65, size=(n, h, w)) / 8.0
            grid = rng.random((h, w)) < 0.5
            grid[rng.integers(h), rng.integers(w)] = True
            pixels = [(v, u) for v in range(h) for u in range(w) if grid[v, u]]
            expected = [sum(values[c, v, u] for v, u in pixels) / len(pixels) for c in range(n)]
            pooled = mask_pool(FeatureMap(values=values), Mask.from_array(grid))
            assert pooled.tolist() == expected

    def test_within_channel_range(self):
        """Each pooled channel lies between that channel's min and max under the mask."""
        rng = np.random.default_rng(3)
        for _ in range(200):
            n, h, w = (int(k) for k in rng.integers(1, 7, size=3))
            values = rng.normal(size=(n, h, w))
            grid = rng.random((h, w)) < 0.4
            grid[rng.integers(h), rng.integers(w)] = True
            pooled = mask_pool(FeatureMap(values=values), Mask.from_array(grid))
            under = values[:, grid]
            assert np.all(pooled >= under.min(axis=1) - 1e-12)
            assert np.all(pooled <= under.max(axis=1) + 1e-12)

    def test_empty_mask(self):
        """Pooling under an empty mask is undefined."""
        x = FeatureMap(values=np.ones((2, 3, 3)))
        with pytest.raises(DegenerateInputError):
            mask_pool(x, Mask.empty(3, 3))

    def test_size_mismatch(self, rect_mask):
        """Mask and map must share the grid."""
        x = FeatureMap(values=np.ones((2, 3, 3)))
        with pytest.raises(DimensionMismatchError):
            mask_pool(x, rect_mask((4, 4), 0, 0, 1, 1))

    def test_feature_map_shape(self):
        """Feature maps are (N, h, w)."""
        with pytest.raises(ValidationError):
            FeatureMap(values=np.ones((3, 3)))


class TestMatchingSets:
    """Test matching_sets."""

    def test_batch_of_one(self):
        """A lone anchor has no partners."""
        batch = LossBatch(embeddings=[[1.0, 0.0]], classes=("car",), tracks=(0,))
        assert matching_sets(0, batch) == (set(), set())

    def test_same_track(self):
        """Two items of one track are mutual positives."""
        batch = LossBatch(embeddings=[[1.0, 0.0], [0.0, 1.0]], classes=("car", "car"), tracks=("A", "A"))
        assert matching_sets(0, batch) == ({1}, set())

    def test_class_restricted(self):
        """Negatives come only from the anchor's class."""
        batch = LossBatch(
            embeddings=[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]],
            classes=("car", "car", "ped"),
            tracks=("A", "B", "C"),
        )
        assert matching_sets(0, batch) == (set(), {1})


class TestTripletLoss:
    """Test the batch-hard triplet loss."""

    def test_identical_embeddings(self):
        """All-equal embeddings leave only the margin."""
        batch = LossBatch(
            embeddings=[[1.0, 0.0]] * 4, classes=("car",) * 4, tracks=("A", "A", "B", "B")
        )
        assert batch_hard_triplet_loss(batch, 0.2) == pytest.approx(0.2)

    def test_separated_clusters(self):
        """Orthogonal track clusters satisfy the margin."""
        batch = LossBatch(
            embeddings=[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]],
            classes=("car",) * 4,
            tracks=("A", "A", "B", "B"),
        )
        assert batch_hard_triplet_loss(batch, 0.2) == 0.0

    def test_one_dimensional_enumeration(self):
        """Track A = {+1, -1}, B = {+1}: hinges 2.2 and 0.2, B's anchor is skipped."""
        batch = LossBatch(embeddings=[[1.0], [-1.0], [1.0]], classes=("car",) * 3, tracks=("A", "A", "B"))
        assert batch_hard_triplet_loss(batch, 0.2) == pytest.approx(1.2)
        assert batch_hard_triplet_loss(batch, 0.2, denominator="batch") == pytest.approx(2.4 / 3)

    def test_no_valid_anchor(self):
        """A batch without positives has zero loss and zero gradient."""
        loss, grad = triplet_loss_and_grad(np.eye(3), ["car"] * 3, [0, 1, 2], 0.2)
        assert loss == 0.0
        assert not grad.any()

    def test_empty_batch(self):
        """An empty batch has zero loss."""
        batch = LossBatch.from_segments([])
        assert len(batch) == 0
        assert batch_hard_triplet_loss(batch, 0.2) == 0.0

    def test_negative_margin(self):
        """Margins below zero are rejected."""
        with pytest.raises(ValueError, match="beta"):
            triplet_loss_and_grad(np.eye(2), ["car"] * 2, [0, 0], -0.1)

    def test_matches_definition(self):
        """Vectorised loss equals the per-anchor definition on random batches."""
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(1, 12))
            batch = LossBatch(
                embeddings=_random_units(rng, n, 4),
                classes=tuple(str(c) for c in rng.choice(["car", "ped"], size=n)),
                tracks=tuple(int(t) for t in rng.integers(0, 3, size=n)),
            )
            beta = float(rng.uniform(0.0, 1.0))
            assert abs(batch_hard_triplet_loss(batch, beta) - _oracle_loss(batch, beta)) <= 1e-12

    def test_invariant_to_batch_order(self):
        """Shuffling the batch leaves the loss unchanged."""
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(2, 12))
            emb = _random_units(rng, n, 4)
            classes = [str(c) for c in rng.choice(["car", "ped"], size=n)]
            tracks = [int(t) for t in rng.integers(0, 3, size=n)]
            beta = float(rng.uniform(0.0, 1.0))
            perm = rng.permutation(n)
            for denominator in ("valid", "batch"):
                loss, _ = triplet_loss_and_grad(emb, classes, tracks, beta, denominator)
                shuffled, _ = triplet_loss_and_grad(
                    emb[perm],
                    [classes[i] for i in perm],
                    [tracks[i] for i in perm],
                    beta,
                    denominator,
                )
                assert shuffled == pytest.approx(loss, abs=1e-12)

    def test_gradient_matches_finite_differences(self):
        """The analytic subgradient agrees with central differences away from kinks."""
        rng = np.random.default_rng(2)
        classes = ["car"] * 6
        tracks = [0, 0, 0, 1, 1, 1]
        beta = 10.0  # keeps every hinge active
        eps = 1e-6
        for _ in range(50):
            emb = rng.normal(size=(6, 3))
            _, grad = triplet_loss_and_grad(emb, classes, tracks, beta)
            numeric = np.zeros_like(emb)
            for i in range(emb.shape[0]):
                for k in range(emb.shape[1]):
                    plus = emb.copy()
                    plus[i, k] += eps
                    minus = emb.copy()
                    minus[i, k] -= eps
                    lp, _ = triplet_loss_and_grad(plus, classes, tracks, beta)
                    lm, _ = triplet_loss_and_grad(minus, classes, tracks, beta)
                    numeric[i, k] = (lp - lm) / (2 * eps)
            assert np.allclose(grad, numeric, rtol=1e-4, atol=1e-6)


class TestLossBatch:
    """Test LossBatch validation and construction."""

    def test_requires_unit_norm(self):
        """Unnormalised embeddings are rejected."""
        with pytest.raises(ValidationError, match="normalised"):
            LossBatch(embeddings=[[2.0, 0.0]], classes=("car",), tracks=(0,))

    def test_rejects_nan(self):
        """A NaN row has no unit norm."""
        with pytest.raises(ValidationError, match="normalised"):
            LossBatch(embeddings=[[float("nan"), 0.0]], classes=("car",), tracks=(0,))

    def test_length_mismatch(self):
        """Labels must match the number of embeddings."""
        with pytest.raises(ValidationError):
            LossBatch(embeddings=[[1.0, 0.0]], classes=("car", "car"), tracks=(0,))

    def test_from_segments_skips_unlabeled(self, make_segment):
        """Segments without a label or an embedding are left out."""
        segments = [
            make_segment(0, 0, embedding=[1.0, 0.0], gt_track=3),
            make_segment(1, 0, embedding=[0.0, 1.0]),
            make_segment(2, 0, gt_track=4),
        ]
        batch = LossBatch.from_segments(segments)
        assert len(batch) == 1
        assert batch.tracks == (3,)


class TestMajorityFilter:
    """Test majority_tracklet_filter."""

    @staticmethod
    def _window(make_segment, frames_per_track: dict[int, list[int]]) -> list:
        window = []
        sid = 0
        for track, frames in frames_per_track.items():
            for t in frames:
                window.append((t, make_segment(sid, t, gt_track=track)))
                sid += 1
        return window

    def test_present_everywhere(self, make_segment):
        """A tracklet in every frame is kept."""
        window = self._window(make_segment, {0: [0, 1, 2, 3]})
        assert len(majority_tracklet_filter(window, 4)) == 4

    def test_exactly_half_dropped(self, make_segment):
        """Presence in exactly half the frames is not a majority."""
        window = self._window(make_segment, {0: [0, 1]})
        assert majority_tracklet_filter(window, 4) == []

    def test_half_plus_one_kept(self, make_segment):
        """One frame over half is enough."""
        window = self._window(make_segment, {0: [0, 1, 2], 1: [3]})
        kept = majority_tracklet_filter(window, 4)
        assert {s.gt_track for s in kept} == {0}
        assert len(kept) == 3

    def test_unlabeled_dropped(self, make_segment):
        """Segments outside any tracklet never enter the loss."""
        window = [(t, make_segment(t, t)) for t in range(4)]
        assert majority_tracklet_filter(window, 4) == []


class TestSampleTrainingWindow:
    """Test sample_training_window."""

    def test_contiguous_frames(self, synth_bundle):
        """The window covers window_len consecutive frames."""
        window = sample_training_window(synth_bundle.frames, 4, np.random.default_rng(0))
        frames = sorted({t for t, _ in window})
        assert len(frames) == 4
        assert frames == list(range(frames[0], frames[0] + 4))
        assert all(seg.frame == t for t, seg in window)

    def test_deterministic(self, synth_bundle):
        """Equal seeds draw equal windows."""
        a = sample_training_window(synth_bundle.frames, 3, np.random.default_rng(5))
        b = sample_training_window(synth_bundle.frames, 3, np.random.default_rng(5))
        assert [s.id for _, s in a] == [s.id for _, s in b]

    def test_too_short(self, synth_bundle):
        """Sequences shorter than the window are rejected."""
        with pytest.raises(DegenerateInputError):
            sample_training_window(synth_bundle.frames, 11, np.random.default_rng(0))

    def test_invalid_length(self, synth_bundle):
        """window_len must be positive."""
        with pytest.raises(ValueError):
            sample_training_window(synth_bundle.frames, 0, np.random.default_rng(0))
