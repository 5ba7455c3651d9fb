import os
import sys
import pathlib

import config
from config import Settings, load_settings
from errors import SeparationToolkitError
from layers import count_params, expected_param_count
from training import load_checkpoint

import logging
from config_logging import setup_logging
logger = logging.getLogger(__name__)

# --- Configuration Constants ---
OUTPUT_BASE_DIR = config.OUTPUT_BASE_DIR


def execute(interaction_dir, settings: Settings, checkpoint_path: str | pathlib.Path | None = None) -> bool:
    """
    Prints the trainable parameter count for N = n_fft/2 + 1, or the count and
    metadata of a stored checkpoint.
    """
    logger.info("--- Params: Starting ---")

    if checkpoint_path is None:
        # 1025 ビンで約2400万パラメータになるため、重みは確保せず閉形式で数える
        print(expected_param_count(settings.n_bins))
        logger.info("--- Params: Finished successfully ---")
        return True

    try:
        checkpoint = load_checkpoint(checkpoint_path)
    except SeparationToolkitError as e:
        logger.error(f"Cannot inspect checkpoint: {e}")
        logger.info("--- Params: Finished with errors ---")
        return False

    print(count_params(checkpoint.params))
    print(f"n_bins={checkpoint.params.n_bins} T={checkpoint.params.T} L={checkpoint.params.L}")
    print(f"best_epoch={checkpoint.epoch} best_loss={checkpoint.best_loss:.10g} "
          f"epochs_run={len(checkpoint.epoch_losses)}")
    print(checkpoint.config.model_dump_json())
    logger.info("--- Params: Finished successfully ---")
    return True


if __name__ == "__main__":
    run_id_arg = sys.argv[1] if len(sys.argv) > 1 else 'test'
    interaction_dir = os.path.join(OUTPUT_BASE_DIR, run_id_arg)

    setup_logging(base_dir=interaction_dir)
    sys.exit(0 if execute(interaction_dir, load_settings()) else 1)
