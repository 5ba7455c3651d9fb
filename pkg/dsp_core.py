"""
Framing, windowing, STFT analysis and overlap-add synthesis (double precision).

Frames are not centred: frame m covers samples [m*hop, m*hop + n_fft) and the tail
is zero-padded, so M = ceil(len(x) / hop). Synthesis divides by the accumulated
squared window, which makes analysis -> synthesis exact for any hop <= n_fft.
"""
import logging

import numpy as np
from scipy import fft as sp_fft
from scipy.signal import get_window

from errors import SignalError
from models.AudioBuffer import AudioBuffer
from models.Spectrogram import ComplexSpectrogram, MagnitudeSpectrogram

logger = logging.getLogger(__name__)

WINDOW_SUM_FLOOR = 1e-12


def hamming_window(n_fft: int) -> np.ndarray:
    """Periodic Hamming window (fftbins=True)."""
    return get_window('hamming', n_fft, fftbins=True).astype(np.float64)


def frame_count(n_samples: int, hop: int) -> int:
    return -(-n_samples // hop)


def frame_signal(x: AudioBuffer, n_fft: int, hop: int) -> np.ndarray:
    """Slices x into M windowed frames of n_fft samples (M x n_fft)."""
    if n_fft < 1 or not 1 <= hop <= n_fft:
        raise SignalError(f"invalid framing n_fft={n_fft} hop={hop}")
    if len(x) == 0:
        raise SignalError("empty signal")

    n_frames = frame_count(len(x), hop)
    padded = np.zeros((n_frames - 1) * hop + n_fft, dtype=np.float64)
    padded[:len(x)] = x.samples

    # sliding_window_view はコピーせずビューを返すので、窓掛けの乗算で初めて実体化される
    frames = np.lib.stride_tricks.sliding_window_view(padded, n_fft)[::hop]
    return frames[:n_frames] * hamming_window(n_fft)


def stft_analysis(frames: np.ndarray, hop: int, orig_len: int) -> ComplexSpectrogram:
    """DFT of every windowed frame, keeping the non-redundant bins 0..n_fft/2."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise SignalError(f"expected an M x n_fft frame matrix, got shape {frames.shape}")
    n_fft = frames.shape[1]
    values = sp_fft.rfft(frames, n=n_fft, axis=1)
    return ComplexSpectrogram(values, n_fft=n_fft, hop=hop, orig_len=orig_len)


def stft(x: AudioBuffer, n_fft: int, hop: int) -> ComplexSpectrogram:
    return stft_analysis(frame_signal(x, n_fft, hop), hop=hop, orig_len=len(x))


def _overlap_add(frames: np.ndarray, hop: int) -> np.ndarray:
    n_frames, n_fft = frames.shape
    out = np.zeros((n_frames - 1) * hop + n_fft, dtype=np.float64)
    for m in range(n_frames):
        out[m * hop:m * hop + n_fft] += frames[m]
    return out


def stft_synthesis(S: ComplexSpectrogram, sample_rate: int) -> AudioBuffer:
    """Inverse DFT, synthesis window, overlap-add, squared-window normalisation, truncation."""
    window = hamming_window(S.n_fft)
    frames = sp_fft.irfft(S.values, n=S.n_fft, axis=1) * window

    signal = _overlap_add(frames, S.hop)
    window_sum = _overlap_add(np.tile(window ** 2, (S.shape[0], 1)), S.hop)

    covered = min(S.orig_len, signal.shape[0])
    if np.any(window_sum[:covered] < WINDOW_SUM_FLOOR):
        raise SignalError("non-invertible configuration")

    signal = signal / np.maximum(window_sum, WINDOW_SUM_FLOOR)
    out = np.zeros(S.orig_len, dtype=np.float64)
    out[:covered] = signal[:covered]
    return AudioBuffer(out, sample_rate)


def magnitude(S: ComplexSpectrogram) -> MagnitudeSpectrogram:
    return MagnitudeSpectrogram(np.abs(S.values), n_fft=S.n_fft, hop=S.hop, orig_len=S.orig_len)
