import io
import os
import sys
import pathlib

import config
from config import Settings, load_settings
from audio_io import read_track
from errors import SeparationToolkitError, StorageError
from evalmetrics import EvalReport, evaluate_track
from separate_source.run import build_strategy
from separation import separate
from storage_strategies import get_storage_strategy
from utils import convert_rows_to_in_memory_csv, read_key_value_csv

import logging
from config_logging import setup_logging
logger = logging.getLogger(__name__)

# --- Configuration Constants ---
OUTPUT_BASE_DIR = config.OUTPUT_BASE_DIR
REPORT_TEXT_FILENAME = config.REPORT_TEXT_FILENAME
REPORT_CSV_FILENAME = config.REPORT_CSV_FILENAME


def load_groups(groups_path: str | pathlib.Path | None) -> dict[str, str]:
    if groups_path is None:
        return {}
    groups_path = pathlib.Path(groups_path)
    buffer = get_storage_strategy(groups_path.parent).read(groups_path.name)
    return read_key_value_csv(buffer)


def evaluate_dataset(
    settings: Settings,
    data_dir: str | pathlib.Path,
    strategy: str,
    checkpoints: list[str] | None = None,
    stage: str = 'enhanced',
    groups: dict[str, str] | None = None,
) -> EvalReport:
    """
    Separates the target out of every track's mixture and scores it against the true
    (target, other) pair. Oracle strategies take their sources from the track itself.
    """
    groups = groups or {}
    report = EvalReport()
    model_strategy = None
    if strategy.lower() not in ('ibm', 'wiener'):
        model_strategy = build_strategy(settings, strategy, checkpoints, stage=stage)

    for name in get_storage_strategy(data_dir).iter_dirs():
        track_dir = pathlib.Path(data_dir) / name
        mixture, source, other = read_track(track_dir, settings.target)
        separation_strategy = model_strategy or build_strategy(settings, strategy, sources_dir=track_dir)

        estimate = separate(separation_strategy, mixture)
        report.results.append(evaluate_track(name, estimate, [source, other], j=0, group=groups.get(name, '')))

        baseline = evaluate_track(f'{name} (mixture)', mixture, [source, other], j=0)
        logger.debug(f"Unprocessed mixture of '{name}': SIR {baseline.sir:.3f} dB")

    if not report.results:
        raise SeparationToolkitError(f"No track directories found in '{data_dir}'")
    return report


def execute(
    interaction_dir,
    settings: Settings,
    data_dir: str | pathlib.Path,
    strategy: str = 's',
    checkpoints: list[str] | None = None,
    stage: str = 'enhanced',
    groups_path: str | pathlib.Path | None = None,
) -> bool:
    """Writes report.txt (one line per track plus medians) and report.csv (track, metric, value)."""
    logger.info("--- Evaluate: Starting ---")
    storage = get_storage_strategy(interaction_dir)

    try:
        report = evaluate_dataset(settings, data_dir, strategy, checkpoints, stage, load_groups(groups_path))

        text = report.to_text()
        storage.save(io.StringIO(text), REPORT_TEXT_FILENAME)
        storage.save(convert_rows_to_in_memory_csv(report.to_rows(), header=['track', 'metric', 'value']),
                     REPORT_CSV_FILENAME)
        logger.info(f"Saved '{REPORT_TEXT_FILENAME}' and '{REPORT_CSV_FILENAME}' in '{interaction_dir}'.")
        print(text, end='')

    except (SeparationToolkitError, StorageError, ValueError) as e:
        logger.error(f"Evaluation failed: {e}")
        logger.info("--- Evaluate: Finished with errors ---")
        return False
    except Exception as e:
        logger.critical(f"An unexpected critical error occurred: {e}", exc_info=True)
        logger.info("--- Evaluate: Finished with errors ---")
        return False

    logger.info("--- Evaluate: Finished successfully ---")
    return True


if __name__ == "__main__":
    # 使い方: python -m evaluate_separation.run <data_dir> <checkpoint> [run_id]
    if len(sys.argv) < 3:
        sys.exit("usage: python -m evaluate_separation.run <data_dir> <checkpoint> [run_id]")
    run_id_arg = sys.argv[3] if len(sys.argv) > 3 else 'test'
    interaction_dir = os.path.join(OUTPUT_BASE_DIR, run_id_arg)

    setup_logging(base_dir=interaction_dir)
    ok = execute(interaction_dir, load_settings(), sys.argv[1], checkpoints=[sys.argv[2]])
    sys.exit(0 if ok else 1)
