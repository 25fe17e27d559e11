import logging
import sys
from argparse import ArgumentParser
from typing import List, Optional

import diagnose
import evaluate
import export_embeddings
import train
from errors import DivergenceError, EMAformerError

logger = logging.getLogger("emaformer")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIVERGED = 3

commands = {
    'train': train,
    'eval': evaluate,
    'diagnose': diagnose,
    'export-embeddings': export_embeddings
}


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="emaformer", description="Variate-token Transformer forecaster with channel/phase embeddings")
    parser.add_argument("--verbose", action="store_true")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, module in commands.items():
        module.add_arguments(subparsers.add_parser(name))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return commands[args.command].program(args)
    except DivergenceError as error:
        logger.error("training diverged: %s", error)
        return EXIT_DIVERGED
    except (EMAformerError, OSError) as error:
        logger.error("%s", error)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
