"""
Inference: model magnitude estimates, alpha-generalized Wiener masks, the
single/two-model strategies and the oracle references.
"""
import logging
from abc import ABC, abstractmethod
from collections.abc import Callable

import numpy as np

import dsp_core
import segmentation
from errors import ShapeError, StrategyError
from layers import bind_params, model_forward, stack_steps
from models.AudioBuffer import AudioBuffer
from models.ModelParams import ModelParams
from models.Spectrogram import ComplexSpectrogram, MagnitudeSpectrogram

logger = logging.getLogger(__name__)

EPS = 1e-12
INFERENCE_BATCH = 64

Estimator = Callable[[MagnitudeSpectrogram], np.ndarray]


def estimate_magnitude(model: ModelParams, mix_mag: MagnitudeSpectrogram,
                       stage: str = 'enhanced') -> MagnitudeSpectrogram:
    """
    tensorize -> per-segment forward -> flatten. stage='filtered' returns the
    skip-filter output instead of the highway output.
    """
    if stage not in ('enhanced', 'filtered'):
        raise ValueError(f"unknown stage '{stage}'")
    if model.n_bins != mix_mag.shape[1]:
        raise ShapeError(f"shape mismatch: model has N={model.n_bins}, spectrogram N={mix_mag.shape[1]}")

    segments = segmentation.tensorize(mix_mag, model.T, model.L)
    weights = bind_params(model)
    outputs = []
    for start in range(0, segments.data.shape[0], INFERENCE_BATCH):
        _, filtered, enhanced = model_forward(weights, segments.data[start:start + INFERENCE_BATCH], model.L)
        outputs.append(stack_steps(enhanced if stage == 'enhanced' else filtered))

    return segmentation.flatten(np.concatenate(outputs), segments.M, n_fft=mix_mag.n_fft,
                                hop=mix_mag.hop, orig_len=mix_mag.orig_len)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 2.0:
        raise StrategyError(f"alpha must lie in (0, 2], got {alpha}")


def alpha_mask(est_mag: np.ndarray, mix_mag: np.ndarray, alpha: float) -> np.ndarray:
    """est^a / (mix^a + eps), not clamped."""
    _check_alpha(alpha)
    est_mag, mix_mag = np.asarray(est_mag, dtype=np.float64), np.asarray(mix_mag, dtype=np.float64)
    if est_mag.shape != mix_mag.shape:
        raise ShapeError(f"shape mismatch: {est_mag.shape} vs {mix_mag.shape}")
    return np.power(est_mag, alpha) / (np.power(mix_mag, alpha) + EPS)


def two_model_mask(est1: np.ndarray, est2: np.ndarray, alpha: float) -> np.ndarray:
    """Mask for source 1 with the denominator |Y|^a replaced by est1^a + est2^a."""
    _check_alpha(alpha)
    est1, est2 = np.asarray(est1, dtype=np.float64), np.asarray(est2, dtype=np.float64)
    if est1.shape != est2.shape:
        raise ShapeError(f"shape mismatch: {est1.shape} vs {est2.shape}")
    p1, p2 = np.power(est1, alpha), np.power(est2, alpha)
    return p1 / (p1 + p2 + EPS)


def apply_mask(mask: np.ndarray, Y: ComplexSpectrogram) -> ComplexSpectrogram:
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != Y.shape:
        raise ShapeError(f"shape mismatch: mask {mask.shape} vs spectrogram {Y.shape}")
    if np.any(mask < 0):
        raise ShapeError("mask entries must be non-negative")
    return ComplexSpectrogram(mask * Y.values, n_fft=Y.n_fft, hop=Y.hop, orig_len=Y.orig_len)


def ideal_binary_mask(source_mags: list[np.ndarray], j: int) -> np.ndarray:
    """1 where |S_j| exceeds the sum of all competing sources, else 0."""
    if len(source_mags) < 2:
        raise StrategyError("ideal binary mask needs at least two sources")
    mags = np.stack([np.asarray(m, dtype=np.float64) for m in source_mags])
    competing = mags.sum(axis=0) - mags[j]
    return (mags[j] > competing).astype(np.float64)


def mask_statistics(mask: np.ndarray) -> dict[str, float]:
    return {
        'min': float(mask.min()),
        'mean': float(mask.mean()),
        'max': float(mask.max()),
        'above_one': float(np.mean(mask > 1.0)),
    }


def model_estimator(model: ModelParams, stage: str = 'enhanced') -> Estimator:
    return lambda mix_mag: estimate_magnitude(model, mix_mag, stage).values


# --- Base Strategy Interface ---
class SeparationStrategy(ABC):
    """Turns a mixture magnitude spectrogram into a mask for the target source."""
    variant = ''

    def __init__(self, alpha: float, n_fft: int, hop: int):
        _check_alpha(alpha)
        self.alpha = alpha
        self.n_fft = n_fft
        self.hop = hop
        self.last_mask_stats: dict[str, float] = {}

    @abstractmethod
    def compute_mask(self, mix_mag: MagnitudeSpectrogram) -> np.ndarray:
        pass

    def __repr__(self):
        return f"<{self.__class__.__name__} variant:{self.variant} alpha:{self.alpha}>"


# --- Concrete Strategies ---
class SingleModelStrategy(SeparationStrategy):
    """GRU-S: one model estimates the target; mask = est^a / |Y|^a."""
    variant = 'GRU-S'

    def __init__(self, estimator: Estimator, alpha: float, n_fft: int, hop: int):
        super().__init__(alpha, n_fft, hop)
        self.estimator = estimator

    def compute_mask(self, mix_mag: MagnitudeSpectrogram) -> np.ndarray:
        return alpha_mask(self.estimator(mix_mag), mix_mag.values, self.alpha)


class TwoModelStrategy(SeparationStrategy):
    """GRU-D (alpha 1.7) and GRU-DWF (alpha 2): target and background models share the denominator."""

    def __init__(self, target_estimator: Estimator, background_estimator: Estimator,
                 alpha: float, n_fft: int, hop: int, variant: str = 'GRU-D'):
        super().__init__(alpha, n_fft, hop)
        self.target_estimator = target_estimator
        self.background_estimator = background_estimator
        self.variant = variant

    def compute_mask(self, mix_mag: MagnitudeSpectrogram) -> np.ndarray:
        return two_model_mask(self.target_estimator(mix_mag), self.background_estimator(mix_mag), self.alpha)


class OracleStrategy(SeparationStrategy):
    """Upper-bound references computed from the true sources (target first)."""

    def __init__(self, sources: list[AudioBuffer], kind: str, alpha: float, n_fft: int, hop: int):
        super().__init__(alpha, n_fft, hop)
        if kind not in ('ibm', 'wiener'):
            raise StrategyError(f"unknown oracle '{kind}'")
        if len(sources) < 2:
            raise StrategyError("oracle masks need the target and at least one other source")
        self.sources = sources
        self.kind = kind
        self.variant = f'oracle-{kind}'

    def compute_mask(self, mix_mag: MagnitudeSpectrogram) -> np.ndarray:
        mags = [dsp_core.magnitude(dsp_core.stft(s, self.n_fft, self.hop)).values for s in self.sources]
        if self.kind == 'ibm':
            return ideal_binary_mask(mags, 0)
        powered = [np.power(m, self.alpha) for m in mags]
        return powered[0] / (np.sum(powered, axis=0) + EPS)


# --- Factory Function ---
VARIANT_ALIASES = {'s': 's', 'gru-s': 's', 'd': 'd', 'gru-d': 'd', 'dwf': 'dwf', 'gru-dwf': 'dwf',
                   'ibm': 'ibm', 'wiener': 'wiener'}
DEFAULT_ALPHAS = {'s': 1.7, 'd': 1.7, 'dwf': 2.0, 'ibm': 1.0, 'wiener': 2.0}


def get_separation_strategy(variant: str, n_fft: int, hop: int, alpha: float | None = None,
                            models: list[ModelParams] | None = None,
                            sources: list[AudioBuffer] | None = None,
                            stage: str = 'enhanced') -> SeparationStrategy:
    """
    Builds the strategy for a variant name ('s', 'd', 'dwf', 'ibm', 'wiener' or GRU-* spellings).
    alpha defaults to 1.7 for GRU-S/GRU-D and 2 for GRU-DWF.
    """
    key = VARIANT_ALIASES.get(variant.lower())
    if key is None:
        raise StrategyError(f"unknown strategy '{variant}'")
    alpha = DEFAULT_ALPHAS[key] if alpha is None else alpha
    models = models or []

    if key == 's':
        if not models:
            raise StrategyError("strategy requires a checkpoint")
        return SingleModelStrategy(model_estimator(models[0], stage), alpha, n_fft, hop)
    if key in ('d', 'dwf'):
        if len(models) < 2:
            raise StrategyError("strategy requires two checkpoints")
        return TwoModelStrategy(model_estimator(models[0], stage), model_estimator(models[1], stage),
                                alpha, n_fft, hop, variant='GRU-D' if key == 'd' else 'GRU-DWF')
    if not sources:
        raise StrategyError("oracle strategies require the true sources")
    return OracleStrategy(sources, key, alpha, n_fft, hop)


def separate(strategy: SeparationStrategy, x: AudioBuffer) -> AudioBuffer:
    """STFT -> |Y| -> mask (per strategy) -> mask * Y -> overlap-add, same length as x."""
    Y = dsp_core.stft(x, strategy.n_fft, strategy.hop)
    mix_mag = dsp_core.magnitude(Y)
    mask = strategy.compute_mask(mix_mag)

    strategy.last_mask_stats = mask_statistics(mask)
    logger.info(f"{strategy.variant} mask: min {strategy.last_mask_stats['min']:.4f}, "
                f"mean {strategy.last_mask_stats['mean']:.4f}, max {strategy.last_mask_stats['max']:.4f}, "
                f"{100 * strategy.last_mask_stats['above_one']:.2f}% of bins above 1")

    return dsp_core.stft_synthesis(apply_mask(mask, Y), x.sample_rate)
