import logging
from argparse import ArgumentParser
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from preprocessing.series import Normalizer, Split, TimeSeriesDataset, WindowSet, chronological_split, fit_normalizer, load_csv, make_windows
from util import RunConfig

logger = logging.getLogger(__name__)


@dataclass
class PreparedData:
    raw: TimeSeriesDataset
    dataset: TimeSeriesDataset
    normalizer: Normalizer
    windows: Dict[Split, WindowSet]


def prepare_data(config: RunConfig, horizon: Optional[int] = None) -> PreparedData:
    """Load, split, z-score on the training rows and cut windows for every split."""
    horizon = horizon or config.horizon
    raw = load_csv(config.dataset_path, name=config.name, timestamp_column=config.timestamp_column, period_daily=config.resolved_period_daily(), start_index=config.start_index)
    raw = raw.with_split(chronological_split(raw, config.resolved_split(), config.lookback, horizon))
    normalizer = fit_normalizer(raw)
    dataset = raw.normalized(normalizer)
    period = config.resolved_period()
    windows = {split: make_windows(dataset, split, config.lookback, horizon, period, lookback_overlap=config.lookback_overlap) for split in Split}
    logger.info("%s: split %s, period %d, windows %s", raw.name, raw.split_bounds, period, {split.value: len(w) for split, w in windows.items()})
    return PreparedData(raw=raw, dataset=dataset, normalizer=normalizer, windows=windows)


def synthetic_series(steps: int = 2400, channels: int = 2, period_daily: int = 24, pulse_width: int = 6, wave: float = 0.3, noise: float = 0.1, seed: int = 0) -> pd.DataFrame:
    """Daily pulses at a channel-specific phase offset, a weak sinusoid and Gaussian noise."""
    rng = np.random.default_rng(seed)
    t = np.arange(steps)
    offsets = rng.permutation(period_daily)[:channels]
    stamps = pd.Timestamp('2020-01-01') + pd.to_timedelta(t * (24 / period_daily), unit='h')
    columns = {'date': stamps.strftime('%Y-%m-%d %H:%M:%S')}
    for channel, offset in enumerate(offsets):
        phase = (t - offset) % period_daily
        pulse = (phase < pulse_width).astype(np.float64)
        cycle = wave * np.sin(2.0 * np.pi * (t + offset) / period_daily)
        columns[f'ch{channel}'] = pulse + cycle + noise * rng.standard_normal(steps)
    return pd.DataFrame(columns)


def write_synthetic(path: Union[str, Path], **kwargs) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    synthetic_series(**kwargs).to_csv(path, index=False, float_format='%.17g')
    return path


if __name__ == "__main__":
    parser = ArgumentParser()
    parser.add_argument("--out", type=str, default="./dataset/synthetic.csv")
    parser.add_argument("--steps", type=int, default=2400)
    parser.add_argument("--channels", type=int, default=2)
    parser.add_argument("--period_daily", type=int, default=24)
    parser.add_argument("--noise", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    path = write_synthetic(args.out, steps=args.steps, channels=args.channels, period_daily=args.period_daily, noise=args.noise, seed=args.seed)
    print(f"Synthetic dataset written to {path}")
