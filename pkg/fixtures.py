"""Synthetic voice + accompaniment clips standing in for multi-track recordings."""
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.signal import butter, sosfilt

from models.AudioBuffer import AudioBuffer

logger = logging.getLogger(__name__)

# Samples are snapped to a 2**-24 grid so sums of components are exact in float64
# and survive a float32 WAV round trip unchanged.
QUANTUM = 2.0 ** -24


class Fixture(BaseModel):
    model_config = ConfigDict(frozen=True)

    fundamental: float = Field(default=220.0, gt=0.0)
    partials: int = Field(default=8, ge=1)
    vibrato_depth: float = Field(default=0.01, ge=0.0, lt=1.0)   # fraction of the fundamental
    vibrato_rate: float = Field(default=5.5, ge=0.0)             # Hz
    band_low: float = Field(default=150.0, gt=0.0)
    band_high: float = Field(default=3000.0, gt=0.0)
    impulse_rate: float = Field(default=2.0, ge=0.0)             # clicks per second
    duration: float = Field(default=4.0, gt=0.0)
    sample_rate: int = Field(default=8000, gt=0)
    level: float = Field(default=0.25, gt=0.0)                   # voice RMS
    seed: int = 0


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.round(x / QUANTUM) * QUANTUM


def _voice(spec: Fixture, rng: np.random.Generator, n: int) -> np.ndarray:
    t = np.arange(n) / spec.sample_rate
    inst_freq = spec.fundamental * (1.0 + spec.vibrato_depth * np.sin(2 * np.pi * spec.vibrato_rate * t))
    phase = 2 * np.pi * np.cumsum(inst_freq) / spec.sample_rate
    nyquist = spec.sample_rate / 2
    voice = np.zeros(n)
    for k in range(1, spec.partials + 1):
        if k * spec.fundamental * (1.0 + spec.vibrato_depth) >= nyquist:
            break
        voice += np.sin(k * phase + rng.uniform(0, 2 * np.pi)) / k
    return voice


def _accompaniment(spec: Fixture, rng: np.random.Generator, n: int) -> np.ndarray:
    high = min(spec.band_high, 0.45 * spec.sample_rate)
    sos = butter(4, [spec.band_low, high], btype='band', fs=spec.sample_rate, output='sos')
    accompaniment = sosfilt(sos, rng.standard_normal(n))

    if spec.impulse_rate > 0:
        period = int(round(spec.sample_rate / spec.impulse_rate))
        click_len = max(int(0.02 * spec.sample_rate), 1)
        click = rng.standard_normal(click_len) * np.exp(-np.arange(click_len) / (0.004 * spec.sample_rate))
        for start in range(0, n, period):
            stop = min(start + click_len, n)
            accompaniment[start:stop] += 3.0 * click[:stop - start]
    return accompaniment


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def synth_fixture(spec: Fixture) -> dict[str, AudioBuffer]:
    """Returns {'mixture', 'voice', 'accompaniment'}; both components at equal RMS."""
    rng = np.random.default_rng(spec.seed)
    n = int(round(spec.duration * spec.sample_rate))

    voice = _voice(spec, rng, n)
    accompaniment = _accompaniment(spec, rng, n)
    voice = _quantize(voice * spec.level / max(_rms(voice), 1e-12))
    accompaniment = _quantize(accompaniment * spec.level / max(_rms(accompaniment), 1e-12))

    logger.debug(f"Fixture: {n} samples at {spec.sample_rate} Hz, voice RMS {_rms(voice):.4f}, "
                 f"accompaniment RMS {_rms(accompaniment):.4f}")
    return {
        'mixture': AudioBuffer(voice + accompaniment, spec.sample_rate),
        'voice': AudioBuffer(voice, spec.sample_rate),
        'accompaniment': AudioBuffer(accompaniment, spec.sample_rate),
    }
