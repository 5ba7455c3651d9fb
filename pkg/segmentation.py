import numpy as np

from errors import ShapeError
from models.SegmentTensor import SegmentTensor
from models.Spectrogram import MagnitudeSpectrogram


def _check_context(T: int, L: int) -> None:
    if L < 0 or T <= 2 * L:
        raise ShapeError("context exceeds segment")


def tensorize(mag: MagnitudeSpectrogram, T: int, L: int) -> SegmentTensor:
    """
    Cuts |Y| into B overlapping segments of T frames, consecutive starts T - 2L apart.

    L zero frames are prepended so the first frame keeps a post-trim position, and
    frames requested beyond the end are zero vectors.
    """
    _check_context(T, L)
    values = mag.values
    n_frames, n_bins = values.shape
    hop = T - 2 * L
    n_segments = SegmentTensor.n_segments(n_frames, T, L)

    padded = np.zeros(((n_segments - 1) * hop + T, n_bins), dtype=np.float64)
    padded[L:L + n_frames] = values

    data = np.stack([padded[b * hop:b * hop + T] for b in range(n_segments)])
    return SegmentTensor(data=data, T=T, L=L, M=n_frames)


def context_trim(segment: np.ndarray, L: int) -> np.ndarray:
    """Drops L rows from each end of a T x N segment (also works on B x T x N)."""
    T = segment.shape[-2]
    _check_context(T, L)
    return segment[..., L:T - L, :]


def flatten(estimates: np.ndarray, M: int, n_fft: int | None = None, hop: int = 1,
            orig_len: int = 0) -> MagnitudeSpectrogram:
    """
    Concatenates B x T' x N post-trim segments back into an M x N spectrogram.
    The left pad was consumed by the trim, so only truncation to M remains.
    """
    estimates = np.asarray(estimates, dtype=np.float64)
    if estimates.ndim != 3:
        raise ShapeError(f"shape mismatch: expected B x T' x N, got {estimates.shape}")
    n_segments, t_prime, n_bins = estimates.shape
    if n_segments * t_prime < M:
        raise ShapeError("insufficient coverage")

    flat = estimates.reshape(n_segments * t_prime, n_bins)[:M]
    if n_fft is None:
        n_fft = max(2 * (n_bins - 1), 1)
    return MagnitudeSpectrogram(flat, n_fft=n_fft, hop=hop, orig_len=orig_len)
