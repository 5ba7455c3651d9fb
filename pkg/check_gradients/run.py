import os
import sys

import config
from config import Settings, load_settings
from errors import SeparationToolkitError
from training import check_model_gradients

import logging
from config_logging import setup_logging
logger = logging.getLogger(__name__)

# --- Configuration Constants ---
OUTPUT_BASE_DIR = config.OUTPUT_BASE_DIR

# --- Logic Constants ---
# Toy dimensions small enough for central differences over every parameter.
N_BINS = 8
SEGMENT_FRAMES = 6
CONTEXT_FRAMES = 1
BATCH = 2
TOLERANCE = 1e-4


def execute(
    interaction_dir,
    settings: Settings,
    n_bins: int = N_BINS,
    segment_frames: int = SEGMENT_FRAMES,
    context_frames: int = CONTEXT_FRAMES,
    batch: int = BATCH,
    tolerance: float = TOLERANCE,
) -> bool:
    """
    Compares the tape gradients of the full model and joint loss with central
    differences and prints the worst relative error. Succeeds below `tolerance`.
    """
    logger.info("--- Gradcheck: Starting ---")

    try:
        max_error = check_model_gradients(n_bins=n_bins, T=segment_frames, L=context_frames, batch=batch,
                                          seed=settings.seed, lam=settings.lambda_l2)
    except SeparationToolkitError as e:
        logger.error(f"Gradient check failed to run: {e}", exc_info=True)
        logger.info("--- Gradcheck: Finished with errors ---")
        return False

    print(f"{max_error:.3e}")
    if max_error >= tolerance:
        logger.error(f"Max relative gradient error {max_error:.3e} exceeds {tolerance:.0e}.")
        logger.info("--- Gradcheck: Finished with errors ---")
        return False

    logger.info(f"Max relative gradient error {max_error:.3e} (< {tolerance:.0e}).")
    logger.info("--- Gradcheck: Finished successfully ---")
    return True


if __name__ == "__main__":
    run_id_arg = sys.argv[1] if len(sys.argv) > 1 else 'test'
    interaction_dir = os.path.join(OUTPUT_BASE_DIR, run_id_arg)

    setup_logging(base_dir=interaction_dir)
    sys.exit(0 if execute(interaction_dir, load_settings()) else 1)
