import os
import sys
import pathlib

import config
from config import Settings, load_settings
from audio_io import read_mono, read_track, wav_write
from errors import SeparationToolkitError, StorageError
from separation import SeparationStrategy, get_separation_strategy, separate
from training import load_checkpoint

import logging
from config_logging import setup_logging
logger = logging.getLogger(__name__)

# --- Configuration Constants ---
OUTPUT_BASE_DIR = config.OUTPUT_BASE_DIR
ESTIMATE_FILENAME = 'estimate.wav'


def build_strategy(
    settings: Settings,
    strategy: str,
    checkpoints: list[str] | None = None,
    sources_dir: str | pathlib.Path | None = None,
    stage: str = 'enhanced',
) -> SeparationStrategy:
    """
    Loads the checkpoints (target model first, background model second) or, for the
    oracle strategies, the true sources of sources_dir, and builds the strategy.
    """
    models = []
    for path in checkpoints or []:
        checkpoint = load_checkpoint(path)
        logger.info(f"Loaded '{path}': {checkpoint!r}")
        models.append(checkpoint.params)

    sources = None
    if sources_dir is not None:
        _, source, other = read_track(sources_dir, settings.target)
        sources = [source, other]

    return get_separation_strategy(strategy, settings.n_fft, settings.hop, alpha=settings.alpha,
                                   models=models, sources=sources, stage=stage)


def execute(
    interaction_dir,
    settings: Settings,
    mixture_path: str | pathlib.Path,
    strategy: str = 's',
    checkpoints: list[str] | None = None,
    sources_dir: str | pathlib.Path | None = None,
    stage: str = 'enhanced',
    output_path: str | pathlib.Path | None = None,
) -> bool:
    """
    Separates the target source out of a mixture WAV and writes it as a float WAV,
    by default to <interaction_dir>/estimate.wav.
    """
    logger.info("--- Separate: Starting ---")
    output_path = pathlib.Path(output_path or pathlib.Path(interaction_dir) / ESTIMATE_FILENAME)

    try:
        separation_strategy = build_strategy(settings, strategy, checkpoints, sources_dir, stage)
        logger.info(f"Using {separation_strategy!r}")

        mixture = read_mono(mixture_path)
        estimate = separate(separation_strategy, mixture)

        wav_write(output_path, estimate)
        logger.info(f"Estimate written to '{output_path}' ({estimate.duration:.2f} s).")
        print(output_path)

    except (SeparationToolkitError, StorageError) as e:
        logger.error(f"Separation failed: {e}")
        logger.info("--- Separate: Finished with errors ---")
        return False
    except Exception as e:
        logger.critical(f"An unexpected critical error occurred: {e}", exc_info=True)
        logger.info("--- Separate: Finished with errors ---")
        return False

    logger.info("--- Separate: Finished successfully ---")
    return True


if __name__ == "__main__":
    # 使い方: python -m separate_source.run <mixture.wav> <checkpoint> [run_id]
    if len(sys.argv) < 3:
        sys.exit("usage: python -m separate_source.run <mixture.wav> <checkpoint> [run_id]")
    run_id_arg = sys.argv[3] if len(sys.argv) > 3 else 'test'
    interaction_dir = os.path.join(OUTPUT_BASE_DIR, run_id_arg)

    setup_logging(base_dir=interaction_dir)
    ok = execute(interaction_dir, load_settings(), sys.argv[1], checkpoints=[sys.argv[2]])
    sys.exit(0 if ok else 1)
