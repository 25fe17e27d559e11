import sys
from argparse import ArgumentParser, Namespace

from analysis.export import export_embeddings
from predictor import Predictor
from train import overrides
from util import build_run_config


def add_arguments(parser: ArgumentParser) -> None:
    parser.add_argument("--config", type=str, required=True)
    parser.add_argument("--checkpoint", type=str)
    parser.add_argument("--out", type=str)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--no-timestamp-column", action="store_true")


def program(args: Namespace) -> int:
    config = build_run_config(args.config, overrides(args))
    checkpoint = args.checkpoint or str(config.out_dir / 'checkpoint')
    predictor = Predictor(config, checkpoint)
    paths = export_embeddings(predictor.model.model.embedding.tables(), config.out_dir / 'embeddings')
    print(f"Embeddings written to {paths[0].parent} ({len(paths)} files)")
    return 0


if __name__ == "__main__":
    from cli import main
    sys.exit(main(["export-embeddings", *sys.argv[1:]]))
