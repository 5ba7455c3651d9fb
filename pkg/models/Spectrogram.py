from dataclasses import dataclass

import numpy as np

from errors import ShapeError


@dataclass(frozen=True)
class ComplexSpectrogram:
    """M x N STFT grid. orig_len is the length of the analysed signal in samples."""
    values: np.ndarray
    n_fft: int
    hop: int
    orig_len: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        _check_grid(values, self.n_fft, self.hop)
        object.__setattr__(self, 'values', values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class MagnitudeSpectrogram:
    """Non-negative M x N grid carrying the metadata of the spectrogram it came from."""
    values: np.ndarray
    n_fft: int
    hop: int
    orig_len: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        _check_grid(values, self.n_fft, self.hop)
        if np.any(values < 0):
            raise ShapeError("magnitude entries must be non-negative")
        object.__setattr__(self, 'values', values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_values(self, values: np.ndarray) -> 'MagnitudeSpectrogram':
        return MagnitudeSpectrogram(values, self.n_fft, self.hop, self.orig_len)


def _check_grid(values: np.ndarray, n_fft: int, hop: int) -> None:
    if values.ndim != 2 or values.shape[0] < 1:
        raise ShapeError(f"shape mismatch: expected a non-empty M x N grid, got {values.shape}")
    if values.shape[1] != n_fft // 2 + 1:
        raise ShapeError(f"shape mismatch: N={values.shape[1]} but n_fft={n_fft} gives {n_fft // 2 + 1}")
    if not 1 <= hop <= n_fft:
        raise ShapeError(f"hop must lie in [1, n_fft], got {hop}")
