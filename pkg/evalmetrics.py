"""
SDR / SIR from a zero-lag orthogonal decomposition of the estimate.

These are scalar projections, not the 512-tap filtered projections of BSS Eval,
so values are not directly comparable with BSS Eval numbers.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from errors import ShapeError, SignalError
from models.AudioBuffer import AudioBuffer

logger = logging.getLogger(__name__)

DB_CAP = 100.0


@dataclass(frozen=True)
class Decomposition:
    s_target: np.ndarray
    e_interf: np.ndarray
    e_artif: np.ndarray


@dataclass
class TrackResult:
    track: str
    sdr: float
    sir: float
    group: str = ''


@dataclass
class EvalReport:
    results: list[TrackResult] = field(default_factory=list)

    def values(self, metric: str, group: str | None = None) -> list[float]:
        return [getattr(r, metric) for r in self.results if group is None or r.group == group]

    def groups(self) -> list[str]:
        return sorted({r.group for r in self.results if r.group})

    def summary(self, group: str | None = None) -> dict[str, dict[str, float]]:
        return {metric: aggregate(self.values(metric, group)) for metric in ('sdr', 'sir')}

    def to_rows(self) -> list[list[str]]:
        """(track, metric, value) rows, then summary rows keyed by a '*' track."""
        rows = []
        for r in self.results:
            rows.append([r.track, 'sdr', f'{r.sdr:.6f}'])
            rows.append([r.track, 'sir', f'{r.sir:.6f}'])
        for metric, stats in self.summary().items():
            for stat, value in stats.items():
                rows.append(['*', f'{metric}_{stat}', f'{value:.6f}'])
        for group in self.groups():
            for metric, stats in self.summary(group).items():
                for stat, value in stats.items():
                    rows.append([f'*{group}', f'{metric}_{stat}', f'{value:.6f}'])
        return rows

    def to_text(self) -> str:
        lines = [f"{r.track}: SDR {r.sdr:8.3f} dB  SIR {r.sir:8.3f} dB" for r in self.results]
        for label, group in [('all', None)] + [(g, g) for g in self.groups()]:
            for metric, stats in self.summary(group).items():
                lines.append(f"[{label}] {metric.upper()} median {stats['median']:.3f} dB "
                             f"(q1 {stats['q1']:.3f}, q3 {stats['q3']:.3f})")
        return '\n'.join(lines) + '\n'


def decompose(estimate: AudioBuffer, true_sources: list[AudioBuffer], j: int) -> Decomposition:
    """Orthogonal split of the estimate against span{s_j} and span{all sources}."""
    est = estimate.samples
    if not true_sources or any(len(s.samples) != len(est) for s in true_sources):
        raise ShapeError("shape mismatch: estimate and true sources need equal lengths")
    refs = np.stack([s.samples for s in true_sources], axis=1)

    target = refs[:, j]
    energy = float(np.dot(target, target))
    if energy == 0.0:
        raise SignalError(f"true source {j} has zero energy")

    s_target = (np.dot(est, target) / energy) * target
    coefficients, *_ = np.linalg.lstsq(refs, est, rcond=None)
    e_interf = refs @ coefficients - s_target
    e_artif = est - s_target - e_interf
    return Decomposition(s_target=s_target, e_interf=e_interf, e_artif=e_artif)


def _ratio_db(numerator: np.ndarray, denominator: np.ndarray) -> float:
    num = float(np.dot(numerator, numerator))
    den = float(np.dot(denominator, denominator))
    if num == 0.0:
        return -DB_CAP
    if den == 0.0:
        return DB_CAP
    return float(np.clip(10.0 * np.log10(num / den), -DB_CAP, DB_CAP))


def sdr(d: Decomposition) -> float:
    return _ratio_db(d.s_target, d.e_interf + d.e_artif)


def sir(d: Decomposition) -> float:
    return _ratio_db(d.s_target, d.e_interf)


def aggregate(values: list[float]) -> dict[str, float]:
    if len(values) == 0:
        raise ValueError("cannot aggregate an empty list")
    q1, median, q3 = np.percentile(np.asarray(values, dtype=np.float64), [25, 50, 75])
    return {'median': float(median), 'q1': float(q1), 'q3': float(q3)}


def evaluate_track(track: str, estimate: AudioBuffer, true_sources: list[AudioBuffer],
                   j: int = 0, group: str = '') -> TrackResult:
    d = decompose(estimate, true_sources, j)
    result = TrackResult(track=track, sdr=sdr(d), sir=sir(d), group=group)
    logger.info(f"{track}: SDR {result.sdr:.3f} dB, SIR {result.sir:.3f} dB")
    return result
