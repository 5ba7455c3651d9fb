import os
import sys
import pathlib

import config
from config import Settings, load_settings
from audio_io import wav_write
from errors import SeparationToolkitError
from fixtures import Fixture, synth_fixture

import logging
from config_logging import setup_logging
logger = logging.getLogger(__name__)

# --- Configuration Constants ---
OUTPUT_BASE_DIR = config.OUTPUT_BASE_DIR
FILENAMES = {
    'mixture': config.MIXTURE_FILENAME,
    'voice': config.VOICE_FILENAME,
    'accompaniment': config.ACCOMPANIMENT_FILENAME,
}
TRACK_NAME = 'fixture'


def execute(
    interaction_dir,
    settings: Settings,
    output_dir: str | pathlib.Path | None = None,
    duration: float = 4.0,
    fundamental: float = 220.0,
) -> bool:
    """
    Writes mixture/voice/accompaniment float WAVs of one synthetic track, laid out
    like a prepared dataset (<output_dir>/fixture/*.wav), at the configured sample rate and seed.
    """
    logger.info("--- Synth: Starting ---")
    output_dir = pathlib.Path(output_dir or pathlib.Path(interaction_dir) / 'data')
    track_dir = output_dir / TRACK_NAME

    try:
        spec = Fixture(duration=duration, fundamental=fundamental,
                       sample_rate=settings.sample_rate, seed=settings.seed)
        buffers = synth_fixture(spec)
        for key, buffer in buffers.items():
            wav_write(track_dir / FILENAMES[key], buffer)
        logger.info(f"Wrote {len(buffers)} WAV files ({spec.duration:.2f} s at {spec.sample_rate} Hz) "
                    f"to '{track_dir}'.")
        print(track_dir)

    except (SeparationToolkitError, ValueError) as e:
        logger.error(f"Fixture synthesis failed: {e}")
        logger.info("--- Synth: Finished with errors ---")
        return False

    logger.info("--- Synth: Finished successfully ---")
    return True


if __name__ == "__main__":
    run_id_arg = sys.argv[1] if len(sys.argv) > 1 else 'test'
    interaction_dir = os.path.join(OUTPUT_BASE_DIR, run_id_arg)

    setup_logging(base_dir=interaction_dir)
    sys.exit(0 if execute(interaction_dir, load_settings()) else 1)
