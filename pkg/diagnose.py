import logging
import sys
from argparse import ArgumentParser, Namespace

from analysis.correlation import cov_matrix, daily_correlations
from analysis.entropy import attention_entropy
from errors import ConfigurationError
from predictor import Predictor
from preprocessing.series import Split, load_csv
from train import overrides
from util import RunConfig, build_run_config

logger = logging.getLogger(__name__)


def add_arguments(parser: ArgumentParser) -> None:
    parser.add_argument("--config", type=str, required=True)
    parser.add_argument("--mode", type=str, choices=["cov", "entropy"], required=True)
    parser.add_argument("--checkpoint", type=str)
    parser.add_argument("--out", type=str)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--no-timestamp-column", action="store_true")


def run_cov(config: RunConfig) -> int:
    # correlations are taken on the raw, un-normalized series
    raw = load_csv(config.dataset_path, name=config.name, timestamp_column=config.timestamp_column, period_daily=config.resolved_period_daily(), start_index=config.start_index)
    report = cov_matrix(daily_correlations(raw, config.resolved_day_len()))
    report.save(config.out_dir, raw.columns)
    if bool(report.invalid.all()):
        logger.warning("every channel pair is invalid: no day has two non-constant channels")
    print(f"days {report.days}, invalid pairs {int(report.invalid.sum())}, max off-diagonal CoV {report.max_off_diagonal():.4f}")
    return 0


def run_entropy(config: RunConfig, checkpoint: str) -> int:
    predictor = Predictor(config, checkpoint)
    report = attention_entropy(predictor.model.model, predictor.data.windows[Split.TEST], config.batch_size)
    report.save(config.out_dir / 'entropy_report.json')
    print(f"{report.config_tag}: H_avg {report.h_avg:.4f} of max {report.h_max:.4f} over {report.windows} phase-0 windows")
    return 0


def program(args: Namespace) -> int:
    config = build_run_config(args.config, overrides(args))
    config.out_dir.mkdir(parents=True, exist_ok=True)
    if args.mode == "cov":
        return run_cov(config)
    if args.checkpoint is None:
        raise ConfigurationError("checkpoint: entropy mode needs --checkpoint")
    return run_entropy(config, args.checkpoint)


if __name__ == "__main__":
    from cli import main
    sys.exit(main(["diagnose", *sys.argv[1:]]))
