import logging
import pathlib
import struct

import numpy as np
import soundfile as sf

import config
from errors import AudioFormatError, SignalError
from models.AudioBuffer import AudioBuffer

logger = logging.getLogger(__name__)

SUPPORTED_SUBTYPES = ('PCM_16', 'FLOAT')


def _check_riff_layout(path: pathlib.Path) -> None:
    """
    Walks the RIFF chunks so a header promising more data than the file holds is
    rejected instead of being decoded partially.
    """
    try:
        raw = path.read_bytes()
    except FileNotFoundError as e:
        raise AudioFormatError(f"WAV file not found: {path}") from e
    except OSError as e:
        raise AudioFormatError(f"Cannot read WAV file {path}: {e}") from e

    if len(raw) < 12 or raw[:4] != b'RIFF' or raw[8:12] != b'WAVE':
        raise AudioFormatError(f"malformed header (not RIFF/WAVE): {path}")

    offset = 12
    seen = set()
    while offset + 8 <= len(raw):
        chunk_id = raw[offset:offset + 4]
        (size,) = struct.unpack('<I', raw[offset + 4:offset + 8])
        if offset + 8 + size > len(raw):
            raise AudioFormatError(f"truncated file: chunk {chunk_id!r} declares {size} bytes in {path}")
        seen.add(chunk_id)
        # チャンクは偶数バイト境界に揃えられる（奇数サイズの場合は1バイトのパディング）
        offset += 8 + size + (size & 1)

    if b'fmt ' not in seen or b'data' not in seen:
        raise AudioFormatError(f"malformed header (missing fmt or data chunk): {path}")


def wav_read(path: str | pathlib.Path) -> tuple[np.ndarray, int]:
    """Returns (frames x channels float64 array, sample_rate). PCM 16-bit is scaled by 1/32768."""
    path = pathlib.Path(path)
    _check_riff_layout(path)
    try:
        info = sf.info(str(path))
        if info.subtype not in SUPPORTED_SUBTYPES:
            raise AudioFormatError(f"unsupported codec {info.subtype} in {path} (need PCM_16 or FLOAT)")
        data, sample_rate = sf.read(str(path), dtype='float64', always_2d=True)
    except (sf.SoundFileError, RuntimeError) as e:
        raise AudioFormatError(f"Failed to decode WAV file {path}: {e}") from e

    logger.debug(f"Read '{path}': {data.shape[0]} frames, {data.shape[1]} channel(s), {sample_rate} Hz.")
    return data, sample_rate


def wav_write(path: str | pathlib.Path, buffer: AudioBuffer, subtype: str = 'FLOAT') -> pathlib.Path:
    if subtype not in SUPPORTED_SUBTYPES:
        raise AudioFormatError(f"unsupported codec {subtype}")
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    samples = buffer.samples.astype(np.float32) if subtype == 'FLOAT' else buffer.samples
    try:
        sf.write(str(path), samples, buffer.sample_rate, subtype=subtype, format='WAV')
    except (sf.SoundFileError, RuntimeError) as e:
        raise AudioFormatError(f"Failed to write WAV file {path}: {e}") from e
    logger.debug(f"Wrote '{path}' ({len(buffer)} samples, {subtype}).")
    return path


def downmix(data: np.ndarray, sample_rate: int) -> AudioBuffer:
    """Per-sample mean over channels (frames x channels input; 1-D is taken as mono)."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        return AudioBuffer(data, sample_rate)
    if data.ndim != 2 or data.shape[1] < 1:
        raise SignalError(f"downmix expects frames x channels, got shape {data.shape}")
    return AudioBuffer(data.mean(axis=1), sample_rate)


def read_mono(path: str | pathlib.Path) -> AudioBuffer:
    return downmix(*wav_read(path))


def build_track(stem_dir: str | pathlib.Path) -> dict[str, AudioBuffer]:
    """
    Downmixes every stem WAV in a directory and forms the mixture (all stems), the
    voice (the stem named vocals/voice) and the accompaniment (all stems but the voice).
    Mixing gains are left untouched.
    """
    stem_dir = pathlib.Path(stem_dir)
    stem_paths = sorted(stem_dir.glob('*.wav'))
    if not stem_paths:
        raise SignalError(f"no stem WAV files in {stem_dir}")

    stems = {p.stem.lower(): read_mono(p) for p in stem_paths}
    voice_names = [name for name in stems if name in config.VOICE_STEM_NAMES]
    if len(voice_names) != 1:
        raise SignalError(f"expected exactly one voice stem {config.VOICE_STEM_NAMES} in {stem_dir}")

    rates = {s.sample_rate for s in stems.values()}
    lengths = {len(s) for s in stems.values()}
    if len(rates) != 1 or len(lengths) != 1:
        raise SignalError(f"stems in {stem_dir} differ in sample rate or length")
    sample_rate = rates.pop()

    voice = stems[voice_names[0]]
    others = [s.samples for name, s in stems.items() if name != voice_names[0]]
    accompaniment = np.sum(others, axis=0) if others else np.zeros(len(voice))
    mixture = voice.samples + accompaniment
    logger.info(f"Built track from {len(stems)} stems in '{stem_dir}' (voice stem '{voice_names[0]}').")
    return {
        'mixture': AudioBuffer(mixture, sample_rate),
        'voice': voice,
        'accompaniment': AudioBuffer(accompaniment, sample_rate),
    }


def read_track(track_dir: str | pathlib.Path, target: str = 'voice') -> tuple[AudioBuffer, AudioBuffer, AudioBuffer]:
    """
    Reads (mixture, source, other) from a track directory. A target.wav paired with
    mixture.wav is the source whatever `target` says; otherwise `target` names the
    source WAV (voice.wav or accompaniment.wav). A missing counterpart falls back
    to mixture - source.
    """
    track_dir = pathlib.Path(track_dir)
    names = {'voice': config.VOICE_FILENAME, 'accompaniment': config.ACCOMPANIMENT_FILENAME}
    if target not in names:
        raise SignalError(f"unknown target '{target}'")

    if (track_dir / config.TARGET_FILENAME).exists():
        source_name, other_name = config.TARGET_FILENAME, None
    else:
        source_name = names[target]
        other_name = names['accompaniment' if target == 'voice' else 'voice']

    mixture = read_mono(track_dir / config.MIXTURE_FILENAME)
    source = read_mono(track_dir / source_name)
    if len(source) != len(mixture) or source.sample_rate != mixture.sample_rate:
        raise SignalError(f"{source_name} does not match {config.MIXTURE_FILENAME} in {track_dir}")

    if other_name is not None and (track_dir / other_name).exists():
        other = read_mono(track_dir / other_name)
    else:
        logger.debug(f"No counterpart of {source_name} in '{track_dir}', using mixture - source.")
        other = AudioBuffer(mixture.samples - source.samples, mixture.sample_rate)
    return mixture, source, other
