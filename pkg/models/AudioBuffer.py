from dataclasses import dataclass

import numpy as np

from errors import NonFiniteError, SignalError


@dataclass(frozen=True)
class AudioBuffer:
    """Mono time-domain samples (float64) with their sample rate in Hz."""
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise SignalError(f"AudioBuffer expects a 1-D signal, got shape {samples.shape}")
        if self.sample_rate <= 0:
            raise SignalError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise NonFiniteError("non-finite value")
        # frozen dataclass なので object.__setattr__ で正規化した配列に差し替える
        object.__setattr__(self, 'samples', samples)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def __repr__(self):
        return f"<AudioBuffer samples:{len(self)} sample_rate:{self.sample_rate}>"
