import logging
import sys
from argparse import ArgumentParser, Namespace

from data import prepare_data
from model.emaformer import EMAformer
from preprocessing.series import Split
from util import build_run_config, save_config

logger = logging.getLogger(__name__)


def add_arguments(parser: ArgumentParser) -> None:
    parser.add_argument("--config", type=str, required=True)
    parser.add_argument("--out", type=str)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--no-timestamp-column", action="store_true")


def overrides(args: Namespace) -> dict:
    return {
        'seed': args.seed,
        'out_dir': args.out,
        'timestamp_column': False if args.no_timestamp_column else None
    }


def program(args: Namespace) -> int:
    config = build_run_config(args.config, overrides(args))
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    save_config(config, out_dir / 'resolved_config.yml')

    data = prepare_data(config)

    model = EMAformer(
        config=config.to_model_config(channels=data.dataset.channels),
        learning_rate=config.learning_rate,
        betas=(config.beta1, config.beta2),
        adam_eps=config.adam_eps,
        clip_norm=config.clip_norm
    )
    model.summary()

    report = model.fit(
        train=data.windows[Split.TRAIN],
        valid=data.windows[Split.VALID],
        test=data.windows[Split.TEST],
        epochs=config.epochs,
        batch_size=config.batch_size,
        patience=config.patience,
        checkpoint=str(out_dir / 'checkpoint')
    )
    report.save(out_dir / 'train_report.json')

    logger.info("best epoch %d, test mse %s, test mae %s", report.best_epoch, report.test_mse, report.test_mae)
    return 0


if __name__ == "__main__":
    from cli import main
    sys.exit(main(["train", *sys.argv[1:]]))
