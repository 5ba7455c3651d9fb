"""Tests for masks, strategies and end-to-end separation."""

import numpy as np
import pytest

import dsp_core
import segmentation
import separation
from errors import ShapeError, StrategyError
from layers import init_model_params, model_forward, stack_steps
from models.AudioBuffer import AudioBuffer
from models.Spectrogram import ComplexSpectrogram, MagnitudeSpectrogram


def zeroed(params):
    for array in params.named_arrays().values():
        array[:] = 0.0
    return params


def random_mag(rng, M=30, N=9) -> MagnitudeSpectrogram:
    return MagnitudeSpectrogram(rng.uniform(size=(M, N)), n_fft=2 * (N - 1), hop=4, orig_len=4 * M)


# ---------------------------------------------------------------------------
# Magnitude estimation
# ---------------------------------------------------------------------------


class TestEstimateMagnitude:
    def test_zero_mixture(self):
        params = init_model_params(9, 6, 1, seed=0)
        mag = MagnitudeSpectrogram(np.zeros((20, 9)), n_fft=16, hop=4, orig_len=80)
        assert np.all(separation.estimate_magnitude(params, mag).values == 0.0)

    def test_shape_and_non_negative(self, rng):
        params = init_model_params(9, 8, 2, seed=1)
        mag = random_mag(rng, M=47)
        estimate = separation.estimate_magnitude(params, mag)
        assert estimate.shape == mag.shape
        assert np.all(estimate.values >= 0.0)
        assert (estimate.n_fft, estimate.hop, estimate.orig_len) == (mag.n_fft, mag.hop, mag.orig_len)

    def test_matches_segment_wise_forward(self, rng):
        params = init_model_params(9, 6, 1, seed=2)
        mag = random_mag(rng, M=25)
        segments = segmentation.tensorize(mag, 6, 1)
        per_segment = [stack_steps(model_forward(params, segment[None], 1)[2])[0] for segment in segments.data]
        expected = np.concatenate(per_segment)[:25]
        np.testing.assert_allclose(separation.estimate_magnitude(params, mag).values, expected, rtol=1e-12, atol=1e-14)

    def test_filtered_stage_bounded_by_mixture(self, rng):
        params = init_model_params(9, 6, 1, seed=4)
        mag = random_mag(rng)
        filtered = separation.estimate_magnitude(params, mag, stage='filtered')
        assert np.all(filtered.values <= mag.values)

    def test_dim_mismatch(self, rng):
        with pytest.raises(ShapeError):
            separation.estimate_magnitude(init_model_params(5, 6, 1, seed=0), random_mag(rng))


# ---------------------------------------------------------------------------
# Masks
# ---------------------------------------------------------------------------


class TestMasks:
    def test_alpha_mask_identity(self, rng):
        mix = rng.uniform(0.5, 1.0, size=(4, 5))
        np.testing.assert_allclose(separation.alpha_mask(mix, mix, 1.7), 1.0, atol=1e-9)

    def test_alpha_mask_scalar(self):
        assert separation.alpha_mask(np.array([1.0]), np.array([2.0]), 2.0)[0] == pytest.approx(0.25)

    def test_alpha_mask_zero_estimate(self, rng):
        est = rng.uniform(size=(3, 3))
        est[1, 2] = 0.0
        assert separation.alpha_mask(est, np.ones((3, 3)), 1.7)[1, 2] == 0.0

    @pytest.mark.parametrize("alpha", [0.0, -1.0, 2.5])
    def test_alpha_out_of_range(self, alpha):
        with pytest.raises(StrategyError):
            separation.alpha_mask(np.ones(2), np.ones(2), alpha)

    def test_two_model_symmetry_and_partition(self, rng):
        est1, est2 = rng.uniform(size=(5, 4)), rng.uniform(size=(5, 4))
        np.testing.assert_allclose(separation.two_model_mask(est1, est1, 1.7), 0.5, atol=1e-9)
        total = separation.two_model_mask(est1, est2, 1.7) + separation.two_model_mask(est2, est1, 1.7)
        np.testing.assert_allclose(total, 1.0, atol=1e-9)

    def test_two_model_empty_background(self, rng):
        est1 = rng.uniform(0.1, 1.0, size=(3, 3))
        np.testing.assert_allclose(separation.two_model_mask(est1, np.zeros((3, 3)), 2.0), 1.0, atol=1e-9)

    def test_two_model_alpha_two_is_wiener(self, rng):
        s1, s2 = rng.uniform(size=(6, 5)), rng.uniform(size=(6, 5))
        np.testing.assert_allclose(separation.two_model_mask(s1, s2, 2.0), s1 ** 2 / (s1 ** 2 + s2 ** 2), atol=1e-9)

    def test_apply_mask_phase_preserved(self, rng):
        values = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        Y = ComplexSpectrogram(values, n_fft=8, hop=2, orig_len=8)
        mask = rng.uniform(0.1, 2.0, size=(4, 5))
        masked = separation.apply_mask(mask, Y)
        np.testing.assert_allclose(np.angle(masked.values), np.angle(values), atol=1e-12)
        np.testing.assert_array_equal(separation.apply_mask(np.ones((4, 5)), Y).values, values)
        assert np.all(separation.apply_mask(np.zeros((4, 5)), Y).values == 0)

    def test_apply_mask_shape(self):
        Y = ComplexSpectrogram(np.ones((4, 5)), n_fft=8, hop=2, orig_len=8)
        with pytest.raises(ShapeError):
            separation.apply_mask(np.ones((5, 4)), Y)

    def test_ideal_binary_mask(self, rng):
        other = rng.uniform(size=(4, 4))
        assert np.all(separation.ideal_binary_mask([2.5 * other, other], 0) == 1.0)
        assert np.all(separation.ideal_binary_mask([np.zeros((4, 4)), other], 0) == 0.0)
        a, b = rng.uniform(size=(4, 4)), rng.uniform(size=(4, 4))
        mask = separation.ideal_binary_mask([a, b], 0)
        for i in range(4):
            for k in range(4):
                assert mask[i, k] == (1.0 if a[i, k] > b[i, k] else 0.0)

    def test_ideal_binary_mask_idempotent(self, rng):
        values = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        Y = ComplexSpectrogram(values, n_fft=8, hop=2, orig_len=8)
        mask = separation.ideal_binary_mask([rng.uniform(size=(4, 5)), rng.uniform(size=(4, 5))], 0)
        once = separation.apply_mask(mask, Y)
        np.testing.assert_array_equal(separation.apply_mask(mask, once).values, once.values)

    def test_ideal_binary_mask_needs_two_sources(self):
        with pytest.raises(StrategyError):
            separation.ideal_binary_mask([np.ones((2, 2))], 0)


# ---------------------------------------------------------------------------
# Strategies and end-to-end separation
# ---------------------------------------------------------------------------


class TestStrategies:
    def test_defaults(self):
        params = init_model_params(9, 6, 1, seed=0)
        assert separation.get_separation_strategy('s', 16, 4, models=[params]).alpha == 1.7
        assert separation.get_separation_strategy('gru-d', 16, 4, models=[params, params]).alpha == 1.7
        dwf = separation.get_separation_strategy('dwf', 16, 4, models=[params, params])
        assert dwf.alpha == 2.0
        assert dwf.variant == 'GRU-DWF'

    def test_two_model_strategy_needs_two_checkpoints(self):
        params = init_model_params(9, 6, 1, seed=0)
        with pytest.raises(StrategyError, match="strategy requires two checkpoints"):
            separation.get_separation_strategy('d', 16, 4, models=[params])

    def test_unknown_strategy(self):
        with pytest.raises(StrategyError):
            separation.get_separation_strategy('q', 16, 4)

    def test_alpha_override_checked(self):
        params = init_model_params(9, 6, 1, seed=0)
        with pytest.raises(StrategyError):
            separation.get_separation_strategy('s', 16, 4, alpha=3.0, models=[params])


class TestSeparate:
    def test_zero_weights_are_silent(self, random_buffer):
        params = zeroed(init_model_params(33, 6, 1, seed=0))
        strategy = separation.get_separation_strategy('s', 64, 16, models=[params])
        out = separation.separate(strategy, random_buffer)
        assert len(out) == len(random_buffer)
        assert np.max(np.abs(out.samples)) < 1e-9
        assert strategy.last_mask_stats['max'] == 0.0

    def test_identity_estimate_reconstructs_input(self, random_buffer):
        strategy = separation.SingleModelStrategy(lambda mag: mag.values, 1.7, 64, 16)
        out = separation.separate(strategy, random_buffer)
        error = np.linalg.norm(out.samples - random_buffer.samples) / np.linalg.norm(random_buffer.samples)
        assert error < 1e-5

    def test_dwf_with_silent_background_matches_single(self, random_buffer):
        single = separation.SingleModelStrategy(lambda mag: mag.values, 2.0, 64, 16)
        double = separation.TwoModelStrategy(lambda mag: mag.values, lambda mag: np.zeros(mag.shape),
                                             2.0, 64, 16, variant='GRU-DWF')
        np.testing.assert_allclose(separation.separate(double, random_buffer).samples,
                                   separation.separate(single, random_buffer).samples, atol=1e-6)

    def test_oracle_wiener_sums_to_mixture(self, rng):
        voice = AudioBuffer(rng.standard_normal(2000), 8000)
        accompaniment = AudioBuffer(rng.standard_normal(2000), 8000)
        mixture = AudioBuffer(voice.samples + accompaniment.samples, 8000)
        to_voice = separation.get_separation_strategy('wiener', 64, 16, sources=[voice, accompaniment])
        to_accompaniment = separation.get_separation_strategy('wiener', 64, 16, sources=[accompaniment, voice])
        total = separation.separate(to_voice, mixture).samples + separation.separate(to_accompaniment, mixture).samples
        np.testing.assert_allclose(total, mixture.samples, atol=1e-6)

    def test_oracle_ibm_is_binary(self, rng):
        voice = AudioBuffer(rng.standard_normal(2000), 8000)
        accompaniment = AudioBuffer(rng.standard_normal(2000), 8000)
        mixture = AudioBuffer(voice.samples + accompaniment.samples, 8000)
        strategy = separation.get_separation_strategy('ibm', 64, 16, sources=[voice, accompaniment])
        mask = strategy.compute_mask(dsp_core.magnitude(dsp_core.stft(mixture, 64, 16)))
        assert set(np.unique(mask)) <= {0.0, 1.0}
