import os
import sys
import argparse
from datetime import datetime

import config
import logging
from config import load_settings
from config_logging import setup_logging
from errors import ConfigError

from train_model.run import execute as train
from separate_source.run import execute as separate
from evaluate_separation.run import execute as evaluate
from check_gradients.run import execute as gradcheck
from synthesize_fixture.run import execute as synth
from count_parameters.run import execute as params
from prepare_dataset.run import execute as prepare

OUTPUT_BASE_DIR = config.OUTPUT_BASE_DIR

# Flag name -> Settings field. Unset flags stay None and fall through to the config file.
SETTING_FLAGS = {
    '--sample-rate': ('sample_rate', int),
    '--n-fft': ('n_fft', int),
    '--hop': ('hop', int),
    '--segment-frames': ('segment_frames', int),
    '--context-frames': ('context_frames', int),
    '--learning-rate': ('learning_rate', float),
    '--batch-size': ('batch_size', int),
    '--clip-norm': ('clip_norm', float),
    '--lambda-l2': ('lambda_l2', float),
    '--patience': ('patience', int),
    '--max-epochs': ('max_epochs', int),
    '--seed': ('seed', int),
    '--alpha': ('alpha', float),
    '--target': ('target', str),
}
STRATEGIES = ['s', 'd', 'dwf', 'ibm', 'wiener']


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="flat key=value settings file")
    common.add_argument('--run-id', help="name of the outputs/<run_id> directory (default: timestamp)")
    for flag, (dest, kind) in SETTING_FLAGS.items():
        common.add_argument(flag, dest=dest, type=kind, default=None)

    parser = argparse.ArgumentParser(prog='skf', description="Skip-filtering singing voice separation toolkit.")
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('train', parents=[common], help="train one model on a prepared dataset")
    p.add_argument('--data', required=True, help="directory of track folders")

    p = commands.add_parser('separate', parents=[common], help="separate the target source out of a mixture")
    p.add_argument('--input', required=True, help="mixture WAV")
    p.add_argument('--output', help="estimate WAV (default: <run dir>/estimate.wav)")
    p.add_argument('--strategy', choices=STRATEGIES, default='s')
    p.add_argument('--checkpoint', action='append', default=[],
                   help="model checkpoint; give twice (target, background) for d/dwf")
    p.add_argument('--sources', help="track folder with the true sources (oracle strategies)")
    p.add_argument('--stage', choices=['enhanced', 'filtered'], default='enhanced')

    p = commands.add_parser('evaluate', parents=[common], help="SDR/SIR report over a prepared dataset")
    p.add_argument('--data', required=True, help="directory of track folders")
    p.add_argument('--strategy', choices=STRATEGIES, default='s')
    p.add_argument('--checkpoint', action='append', default=[])
    p.add_argument('--stage', choices=['enhanced', 'filtered'], default='enhanced')
    p.add_argument('--groups', help="CSV of track,group for per-group medians")

    commands.add_parser('gradcheck', parents=[common], help="finite-difference check of the model gradients")

    p = commands.add_parser('synth', parents=[common], help="write a synthetic voice + accompaniment track")
    p.add_argument('--output', help="dataset directory (default: <run dir>/data)")
    p.add_argument('--duration', type=float, default=4.0)
    p.add_argument('--fundamental', type=float, default=220.0)

    p = commands.add_parser('params', parents=[common], help="print the trainable parameter count")
    p.add_argument('--checkpoint', help="inspect a stored checkpoint instead")

    p = commands.add_parser('prepare', parents=[common], help="downmix stem folders into training tracks")
    p.add_argument('--stems', required=True, help="directory of per-track stem folders")
    p.add_argument('--output', help="dataset directory (default: <run dir>/data)")

    return parser


def run_command(args: argparse.Namespace, interaction_dir: str, settings) -> bool:
    if args.command == 'train':
        return train(interaction_dir, settings, args.data)
    if args.command == 'separate':
        return separate(interaction_dir, settings, args.input, strategy=args.strategy,
                        checkpoints=args.checkpoint, sources_dir=args.sources,
                        stage=args.stage, output_path=args.output)
    if args.command == 'evaluate':
        return evaluate(interaction_dir, settings, args.data, strategy=args.strategy,
                        checkpoints=args.checkpoint, stage=args.stage, groups_path=args.groups)
    if args.command == 'gradcheck':
        return gradcheck(interaction_dir, settings)
    if args.command == 'synth':
        return synth(interaction_dir, settings, output_dir=args.output,
                     duration=args.duration, fundamental=args.fundamental)
    if args.command == 'params':
        return params(interaction_dir, settings, checkpoint_path=args.checkpoint)
    return prepare(interaction_dir, settings, args.stems, output_dir=args.output)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    # 1. 実行IDを決定する（指定がなければ日時）
    run_id = args.run_id or datetime.now().strftime('%Y%m%d_%H%M%S_%f')

    # 2. この実行の成果物とログはすべて outputs/<run_id> に置く
    interaction_dir = os.path.join(OUTPUT_BASE_DIR, run_id)
    setup_logging(base_dir=interaction_dir)
    logger = logging.getLogger(__name__)

    logger.info(f"--- Starting '{args.command}' with Run ID: {run_id} ---")
    logger.info(f"All outputs will be saved in: {interaction_dir}")

    # 3. 設定: デフォルト < 設定ファイル < SKF_SEED < コマンドライン
    overrides = {dest: getattr(args, dest) for dest, _ in SETTING_FLAGS.values()}
    try:
        settings = load_settings(args.config, overrides)
    except ConfigError as e:
        logger.error(f"{e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
    logger.debug(f"Settings: {settings.model_dump()}")

    return 0 if run_command(args, interaction_dir, settings) else 1


if __name__ == "__main__":
    sys.exit(main())
