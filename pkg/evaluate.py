import json
import logging
import sys
from argparse import ArgumentParser, Namespace
from typing import List, Optional, Union

import pandas as pd

from errors import ConfigurationError
from predictor import Predictor
from train import overrides
from util import build_run_config

logger = logging.getLogger(__name__)


def add_arguments(parser: ArgumentParser) -> None:
    parser.add_argument("--config", type=str, required=True)
    parser.add_argument("--checkpoint", type=str, help="checkpoint path; may contain {horizon}")
    parser.add_argument("--out", type=str)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--horizons", type=str, help="comma separated, e.g. 96,192,336,720, or 'standard' for the benchmark set")
    parser.add_argument("--dump-forecasts", action="store_true")
    parser.add_argument("--no-timestamp-column", action="store_true")


def parse_horizons(text: Optional[str]) -> Union[str, List[int], None]:
    if text is None:
        return None
    if text.strip() == 'standard':
        return 'standard'
    try:
        horizons = [int(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise ConfigurationError(f"horizons: expected comma separated integers, got {text!r}")
    if not horizons or any(horizon <= 0 for horizon in horizons):
        raise ConfigurationError(f"horizons: expected positive integers, got {text!r}")
    return horizons


def program(args: Namespace) -> int:
    config = build_run_config(args.config, {**overrides(args), 'horizons': parse_horizons(args.horizons)})
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint = args.checkpoint or str(out_dir / 'checkpoint')

    rows = []
    print("horizon, mse, mae")
    for horizon in config.resolved_horizons():
        path = checkpoint.format(horizon=horizon) if '{horizon}' in checkpoint else checkpoint
        predictor = Predictor(config, path, horizon=horizon)
        mse, mae = predictor.evaluate()
        print(f"{horizon}, {mse:.6f}, {mae:.6f}")
        rows.append({'horizon': str(horizon), 'mse': mse, 'mae': mae})
        if config.dump_forecasts or args.dump_forecasts:
            predictor.dump(out_dir / 'forecasts' / f'h{horizon}')

    mean = {
        'horizon': 'mean',
        'mse': sum(row['mse'] for row in rows) / len(rows),
        'mae': sum(row['mae'] for row in rows) / len(rows)
    }
    print(f"mean, {mean['mse']:.6f}, {mean['mae']:.6f}")
    rows.append(mean)

    pd.DataFrame(rows).to_csv(out_dir / 'eval_metrics.csv', index=False, float_format='%.17g')
    (out_dir / 'eval_report.json').write_text(json.dumps({'dataset': config.name, 'rows': rows}, indent=2) + "\n", encoding='utf-8')
    return 0


if __name__ == "__main__":
    from cli import main
    sys.exit(main(["eval", *sys.argv[1:]]))
