import os
import sys
import pathlib

import config
from config import Settings, load_settings
from audio_io import build_track, wav_write
from errors import SeparationToolkitError, StorageError
from storage_strategies import get_storage_strategy

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


def execute(
    interaction_dir,
    settings: Settings,
    stems_root: str | pathlib.Path,
    output_dir: str | pathlib.Path | None = None,
) -> bool:
    """
    Turns <stems_root>/<track>/*.wav stem folders into the mixture/voice/accompaniment
    layout `train` and `evaluate` read. Tracks that fail are skipped and counted.
    """
    logger.info("--- Prepare: Starting ---")
    output_dir = pathlib.Path(output_dir or pathlib.Path(interaction_dir) / 'data')

    try:
        track_names = list(get_storage_strategy(stems_root).iter_dirs())
    except StorageError as e:
        logger.error(f"Cannot list stem folders: {e}")
        logger.info("--- Prepare: Finished with errors ---")
        return False

    if not track_names:
        logger.warning(f"No track folders in '{stems_root}'. Nothing to prepare.")
        logger.info("--- Prepare: Finished (No output) ---")
        return False

    failed = 0
    for name in track_names:
        try:
            buffers = build_track(pathlib.Path(stems_root) / name)
            if buffers['mixture'].sample_rate != settings.sample_rate:
                logger.warning(f"Track '{name}' is sampled at {buffers['mixture'].sample_rate} Hz, "
                               f"config says {settings.sample_rate} Hz.")
            for key, buffer in buffers.items():
                wav_write(output_dir / name / FILENAMES[key], buffer)
        except SeparationToolkitError as e:
            # 1トラックの失敗で全体を止めない
            failed += 1
            logger.error(f"Skipping track '{name}': {e}")
            continue
        logger.info(f"Prepared track '{name}'.")

    logger.info(f"Prepared {len(track_names) - failed} of {len(track_names)} track(s) in '{output_dir}'.")
    if failed:
        logger.info("--- Prepare: Finished with errors ---")
        return False

    print(output_dir)
    logger.info("--- Prepare: Finished successfully ---")
    return True


if __name__ == "__main__":
    # 使い方: python -m prepare_dataset.run <stems_root> [run_id]
    if len(sys.argv) < 2:
        sys.exit("usage: python -m prepare_dataset.run <stems_root> [run_id]")
    run_id_arg = sys.argv[2] if len(sys.argv) > 2 else 'test'
    interaction_dir = os.path.join(OUTPUT_BASE_DIR, run_id_arg)

    setup_logging(base_dir=interaction_dir)
    sys.exit(0 if execute(interaction_dir, load_settings(), sys.argv[1]) else 1)
