import os
import sys
import pathlib

import config
from config import Settings, load_settings
from audio_io import read_track
from errors import SeparationToolkitError, StorageError
from storage_strategies import get_storage_strategy
from training import TrainingSet, prepare_segments, save_checkpoint, train
from utils import convert_rows_to_in_memory_csv

import logging
from config_logging import setup_logging
logger = logging.getLogger(__name__)

# --- Configuration Constants ---
OUTPUT_BASE_DIR = config.OUTPUT_BASE_DIR
CHECKPOINT_FILENAME = config.CHECKPOINT_FILENAME
LOSSES_FILENAME = 'epoch_losses.csv'


def load_training_set(data_dir: str | pathlib.Path, settings: Settings) -> TrainingSet:
    """
    Every sub-directory of data_dir is one track: mixture.wav paired with target.wav,
    or mixture.wav plus voice.wav and/or accompaniment.wav (see audio_io.read_track).
    Tracks are read in sorted order so the segment order is reproducible.
    """
    storage = get_storage_strategy(data_dir)
    track_names = list(storage.iter_dirs())
    if not track_names:
        raise SeparationToolkitError(f"No track directories found in '{data_dir}'")

    parts = []
    for name in track_names:
        mixture, source, other = read_track(pathlib.Path(data_dir) / name, settings.target)
        if mixture.sample_rate != settings.sample_rate:
            logger.warning(f"Track '{name}' is sampled at {mixture.sample_rate} Hz, "
                           f"config says {settings.sample_rate} Hz.")
        part = prepare_segments(mixture, source, other, settings, name)
        logger.info(f"Track '{name}': {len(part)} segments.")
        parts.append(part)
    return TrainingSet.concatenate(parts)


def execute(
    interaction_dir,
    settings: Settings,
    data_dir: str | pathlib.Path,
    checkpoint_filename: str = CHECKPOINT_FILENAME,
) -> bool:
    """
    Trains one model on the '{target}' source of every track in data_dir and writes the
    best-loss checkpoint plus the per-epoch losses into the run directory.
    """
    logger.info("--- Train: Starting ---")
    logger.info(f"Target source: '{settings.target}', data directory: '{data_dir}'.")

    storage = get_storage_strategy(interaction_dir)

    try:
        # 1. 全トラックをセグメント化する
        dataset = load_training_set(data_dir, settings)
        logger.info(f"Loaded {len(dataset)} segments from {len(set(dataset.tracks))} track(s).")

        # 2. 学習（早期終了つき）
        checkpoint = train(settings.train_config(), dataset)
        logger.info(f"Best epoch {checkpoint.epoch} with mean loss {checkpoint.best_loss:.6g}.")

        # 3. チェックポイントと損失の推移を保存する
        saved = save_checkpoint(checkpoint, pathlib.Path(interaction_dir) / checkpoint_filename)
        rows = [[str(epoch), f'{loss:.10g}'] for epoch, loss in enumerate(checkpoint.epoch_losses, start=1)]
        storage.save(convert_rows_to_in_memory_csv(rows, header=['epoch', 'loss']), LOSSES_FILENAME)
        print(saved)

    except (SeparationToolkitError, StorageError) as e:
        logger.error(f"Training failed: {e}", exc_info=True)
        logger.info("--- Train: Finished with errors ---")
        return False
    except Exception as e:
        logger.critical(f"An unexpected critical error occurred: {e}", exc_info=True)
        logger.info("--- Train: Finished with errors ---")
        return False

    logger.info("--- Train: Finished successfully ---")
    return True


if __name__ == "__main__":
    # 使い方: python -m train_model.run <data_dir> [run_id]
    if len(sys.argv) < 2:
        sys.exit("usage: python -m train_model.run <data_dir> [run_id]")
    run_id_arg = sys.argv[2] if len(sys.argv) > 2 else 'test'
    interaction_dir = os.path.join(OUTPUT_BASE_DIR, run_id_arg)

    setup_logging(base_dir=interaction_dir)
    sys.exit(0 if execute(interaction_dir, load_settings(), sys.argv[1]) else 1)
