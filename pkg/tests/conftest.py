from pathlib import Path
from typing import Callable, Iterable, Optional

import pytest
import torch
import yaml

import model  # noqa: F401  float64 default dtype
from data import write_synthetic
from model.config import ModelConfig
from preprocessing.series import TimeSeriesDataset


def finite_difference(loss_fn: Callable[[], torch.Tensor], param: torch.Tensor, indices: Optional[Iterable[int]] = None, eps: float = 1e-5) -> torch.Tensor:
    """Central differences of ``loss_fn`` w.r.t. selected flat entries of ``param``."""
    flat = param.data.view(-1)
    indices = range(flat.numel()) if indices is None else list(indices)
    result = torch.zeros(flat.numel())
    with torch.no_grad():
        for i in indices:
            original = float(flat[i])
            flat[i] = original + eps
            plus = float(loss_fn())
            flat[i] = original - eps
            minus = float(loss_fn())
            flat[i] = original
            result[i] = (plus - minus) / (2 * eps)
    return result.view_as(param)


def gradient_mismatches(analytic: torch.Tensor, numeric: torch.Tensor, rtol: float = 1e-4, atol: float = 1e-9) -> int:
    """Entries off by more than ``atol`` whose relative error ``|a - n| / max(|a|, |n|, 1e-6)`` exceeds ``rtol``."""
    difference = (analytic - numeric).abs()
    scale = torch.maximum(torch.maximum(analytic.abs(), numeric.abs()), torch.full_like(analytic, 1e-6))
    return int(((difference > atol) & (difference / scale > rtol)).sum())


@pytest.fixture
def tiny_config() -> Callable[..., ModelConfig]:
    def build(**overrides) -> ModelConfig:
        values = dict(lookback=8, horizon=4, channels=4, period=6, embedding_dim=16, n=1, heads=2, d_ff=16, dropout_rate=0.0, seed=0)
        values.update(overrides)
        return ModelConfig(**values)
    return build


@pytest.fixture
def make_dataset() -> Callable[..., TimeSeriesDataset]:
    def build(values, period_daily: int = 24, start_index: int = 0, split_bounds=None, name: str = 'toy') -> TimeSeriesDataset:
        values = torch.as_tensor(values, dtype=torch.float64)
        if values.dim() == 1:
            values = values.unsqueeze(1)
        columns = tuple(f'ch{i}' for i in range(values.size(1)))
        return TimeSeriesDataset(name=name, values=values, columns=columns, period_daily=period_daily, start_index=start_index, split_bounds=split_bounds)
    return build


@pytest.fixture
def synthetic_csv(tmp_path: Path) -> Path:
    return write_synthetic(tmp_path / 'synthetic.csv', steps=480, channels=3, period_daily=24, seed=1)


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[..., Path]:
    def write(name: str = 'run.yml', **values) -> Path:
        path = tmp_path / name
        path.write_text(yaml.safe_dump({key: str(value) if isinstance(value, Path) else value for key, value in values.items()}), encoding='utf-8')
        return path
    return write


@pytest.fixture
def tiny_run(synthetic_csv: Path, tmp_path: Path) -> dict:
    """Keys of a run small enough to train in a second or two."""
    return dict(
        dataset_path=synthetic_csv,
        period_daily=24,
        split_ratios=[0.7, 0.1, 0.2],
        lookback=24,
        horizon=8,
        n=1,
        embedding_dim=8,
        heads=2,
        d_ff=16,
        dropout_rate=0.0,
        seed=3,
        learning_rate=0.001,
        batch_size=64,
        epochs=2,
        patience=2,
        out_dir=tmp_path / 'run'
    )
