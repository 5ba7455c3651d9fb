from dataclasses import dataclass

import numpy as np

from errors import ShapeError


@dataclass(frozen=True)
class SegmentTensor:
    """
    B x T x N overlapping context segments of a magnitude spectrogram.
    Consecutive segments start T - 2L frames apart; M is the original frame count.
    """
    data: np.ndarray
    T: int
    L: int
    M: int

    def __post_init__(self):
        if self.T <= 2 * self.L:
            raise ShapeError("context exceeds segment")
        if self.data.ndim != 3 or self.data.shape[1] != self.T:
            raise ShapeError(f"shape mismatch: expected B x {self.T} x N, got {self.data.shape}")
        if self.data.shape[0] != self.n_segments(self.M, self.T, self.L):
            raise ShapeError("insufficient coverage")
        if np.any(self.data < 0):
            raise ShapeError("segment entries must be non-negative")

    @property
    def hop(self) -> int:
        return self.T - 2 * self.L

    @property
    def n_bins(self) -> int:
        return self.data.shape[2]

    @staticmethod
    def n_segments(M: int, T: int, L: int) -> int:
        return -(-M // (T - 2 * L))
