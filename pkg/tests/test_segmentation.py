"""Tests for segmentation (tensorize / context_trim / flatten)."""

import numpy as np
import pytest

import segmentation
from errors import ShapeError
from models.Spectrogram import MagnitudeSpectrogram


def labelled(M: int, N: int = 3) -> MagnitudeSpectrogram:
    """Frame m carries the value m + 1 in every bin."""
    values = np.repeat(np.arange(1, M + 1, dtype=np.float64)[:, None], N, axis=1)
    return MagnitudeSpectrogram(values, n_fft=2 * (N - 1), hop=1, orig_len=M)


def round_trip(mag: MagnitudeSpectrogram, T: int, L: int) -> np.ndarray:
    segments = segmentation.tensorize(mag, T, L)
    trimmed = np.stack([segmentation.context_trim(s, L) for s in segments.data])
    return segmentation.flatten(trimmed, segments.M).values


# ---------------------------------------------------------------------------
# tensorize
# ---------------------------------------------------------------------------


class TestTensorize:
    def test_segment_count_and_start(self):
        segments = segmentation.tensorize(labelled(24), T=6, L=1)
        assert segments.data.shape == (6, 6, 3)
        # segment 2 starts at padded frame 5 (1-based), i.e. original frame 4
        np.testing.assert_array_equal(segments.data[1, :, 0], [4, 5, 6, 7, 8, 9])

    def test_first_segment_left_padded(self):
        segments = segmentation.tensorize(labelled(24), T=6, L=1)
        np.testing.assert_array_equal(segments.data[0, :, 0], [0, 1, 2, 3, 4, 5])

    def test_full_dims_short_input(self):
        segments = segmentation.tensorize(labelled(12), T=18, L=3)
        assert segments.data.shape[0] == 1
        assert np.all(segments.data[0, 3 + 12:] == 0.0)

    def test_full_scale_count(self):
        # 40 frames with T' = 12 -> ceil(40 / 12) = 4 segments
        segments = segmentation.tensorize(labelled(40), T=18, L=3)
        assert segments.data.shape[0] == 4

    def test_no_context_single_segment_is_identity(self):
        mag = labelled(7)
        segments = segmentation.tensorize(mag, T=7, L=0)
        np.testing.assert_array_equal(segments.data[0], mag.values)

    def test_hop_between_segments(self):
        segments = segmentation.tensorize(labelled(50), T=10, L=2)
        starts = segments.data[1:, 0, 0]
        np.testing.assert_array_equal(np.diff(starts), 6)

    def test_context_exceeds_segment(self):
        with pytest.raises(ShapeError, match="context exceeds segment"):
            segmentation.tensorize(labelled(10), T=6, L=3)


# ---------------------------------------------------------------------------
# context_trim
# ---------------------------------------------------------------------------


class TestContextTrim:
    def test_index_oracle(self):
        segment = np.arange(1, 7, dtype=np.float64)[:, None]
        np.testing.assert_array_equal(segmentation.context_trim(segment, 1)[:, 0], [2, 3, 4, 5])

    def test_full_dims_keep_twelve_rows(self):
        assert segmentation.context_trim(np.zeros((18, 5)), 3).shape == (12, 5)

    def test_no_context_is_identity(self, rng):
        segment = rng.uniform(size=(6, 4))
        np.testing.assert_array_equal(segmentation.context_trim(segment, 0), segment)

    def test_batched(self):
        assert segmentation.context_trim(np.zeros((4, 10, 3)), 2).shape == (4, 6, 3)

    def test_context_exceeds_segment(self):
        with pytest.raises(ShapeError, match="context exceeds segment"):
            segmentation.context_trim(np.zeros((4, 3)), 2)


# ---------------------------------------------------------------------------
# flatten
# ---------------------------------------------------------------------------


class TestFlatten:
    def test_round_trip_exact(self):
        mag = labelled(24)
        result = round_trip(mag, 6, 1)
        assert result.shape == (24, 3)
        np.testing.assert_array_equal(result, mag.values)

    def test_round_trip_random_configurations(self, rng):
        for _ in range(200):
            L = int(rng.integers(0, 4))
            T = int(rng.integers(2 * L + 1, 2 * L + 9))
            M = int(rng.integers(1, 60))
            values = rng.uniform(size=(M, 5))
            mag = MagnitudeSpectrogram(values, n_fft=8, hop=2, orig_len=M * 2)
            np.testing.assert_array_equal(round_trip(mag, T, L), values)

    def test_all_zero(self):
        result = segmentation.flatten(np.zeros((3, 4, 5)), 10)
        assert result.shape == (10, 5)
        assert np.all(result.values == 0.0)

    def test_metadata_carried(self):
        result = segmentation.flatten(np.zeros((2, 4, 5)), 7, n_fft=8, hop=2, orig_len=14)
        assert (result.n_fft, result.hop, result.orig_len) == (8, 2, 14)

    def test_insufficient_coverage(self):
        with pytest.raises(ShapeError, match="insufficient coverage"):
            segmentation.flatten(np.zeros((2, 4, 5)), 9)

    def test_non_negativity_preserved(self, rng):
        mag = MagnitudeSpectrogram(rng.uniform(size=(30, 5)), n_fft=8, hop=2, orig_len=60)
        segments = segmentation.tensorize(mag, 8, 2)
        assert np.all(segments.data >= 0)
