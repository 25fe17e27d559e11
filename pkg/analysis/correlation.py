import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd
import torch

from errors import ContractError
from preprocessing.series import TimeSeriesDataset

logger = logging.getLogger(__name__)


@dataclass
class CovReport:
    """Across-day statistics of the daily Pearson matrices.

    Pairs with fewer than two valid days carry NaN in ``mean``/``std``/``cov``
    and are flagged in ``invalid``; pairs whose mean correlation is (near) zero
    have ``cov = inf`` and are flagged in ``infinite``.
    """
    mean: torch.Tensor
    std: torch.Tensor
    cov: torch.Tensor
    valid_days: torch.Tensor
    invalid: torch.Tensor
    infinite: torch.Tensor
    days: int

    @property
    def channels(self) -> int:
        return self.mean.size(0)

    def max_off_diagonal(self) -> float:
        """Largest finite off-diagonal CoV (NaN when there is none)."""
        mask = ~torch.eye(self.channels, dtype=torch.bool) & torch.isfinite(self.cov)
        if not mask.any():
            return float('nan')
        return float(self.cov[mask].max())

    def to_dict(self) -> dict:
        def encode(matrix: torch.Tensor) -> list:
            return [[None if value != value else ('inf' if abs(value) == float('inf') else value) for value in row] for row in matrix.tolist()]

        return {
            'channels': self.channels,
            'days': self.days,
            'mean': encode(self.mean),
            'std': encode(self.std),
            'cov': encode(self.cov),
            'valid_days': self.valid_days.tolist(),
            'invalid_pairs': int(self.invalid.sum()),
            'infinite_pairs': int(self.infinite.sum())
        }

    def save(self, out_dir: Union[str, Path], columns: Optional[Sequence[str]] = None) -> List[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        columns = list(columns) if columns is not None else [str(i) for i in range(self.channels)]
        report = out_dir / 'cov_report.json'
        report.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding='utf-8')
        paths = [report]
        for name, matrix in (('mean', self.mean), ('std', self.std), ('cov', self.cov)):
            path = out_dir / f'cov_{name}.csv'
            pd.DataFrame(matrix.numpy(), index=columns, columns=columns).to_csv(path, float_format='%.17g')
            paths.append(path)
        return paths


def pearson(block: torch.Tensor, tolerance: float = 1e-12) -> torch.Tensor:
    """Pearson matrix of ``block[n, C]``; entries touching a constant channel are NaN."""
    centered = block - block.mean(dim=0, keepdim=True)
    covariance = centered.T @ centered / block.size(0)
    std = torch.sqrt(torch.diagonal(covariance))
    scale = torch.clamp(block.abs().amax(dim=0), min=1.0)
    valid = std > tolerance * scale
    correlation = covariance / torch.outer(std, std)
    return torch.where(valid[:, None] & valid[None, :], correlation, torch.full_like(correlation, float('nan')))


def daily_correlations(ds: Union[TimeSeriesDataset, torch.Tensor], day_len: int) -> List[torch.Tensor]:
    """One Pearson matrix per complete day of raw data; a trailing partial day is dropped."""
    values = ds.values if isinstance(ds, TimeSeriesDataset) else ds
    if day_len < 2:
        raise ContractError(f"day_len must be at least 2, got {day_len}")
    days = values.size(0) // day_len
    if days < 2:
        raise ContractError(f"{values.size(0)} rows hold fewer than two days of {day_len} steps")
    blocks = values[:days * day_len].reshape(days, day_len, values.size(1))
    return [pearson(block) for block in blocks]


def cov_matrix(daily: Sequence[torch.Tensor], zero_mean: float = 1e-12) -> CovReport:
    """Population mean/std over days and CoV = std / mean, per channel pair."""
    if len(daily) < 2:
        raise ContractError(f"need at least two daily matrices, got {len(daily)}")
    stack = torch.stack(list(daily))
    valid = ~torch.isnan(stack)
    count = valid.sum(dim=0)
    filled = torch.where(valid, stack, torch.zeros_like(stack))
    mean = filled.sum(dim=0) / count.clamp(min=1)
    deviation = torch.where(valid, stack - mean, torch.zeros_like(stack))
    std = torch.sqrt((deviation * deviation).sum(dim=0) / count.clamp(min=1))

    invalid = count < 2
    infinite = ~invalid & (mean.abs() < zero_mean)
    cov = torch.where(infinite, torch.full_like(mean, float('inf')), std / torch.where(infinite, torch.ones_like(mean), mean))

    nan = torch.full_like(mean, float('nan'))
    mean, std, cov = (torch.where(invalid, nan, matrix) for matrix in (mean, std, cov))
    if invalid.any():
        logger.warning("%d of %d channel pairs have fewer than two valid days", int(invalid.sum()), invalid.numel())
    return CovReport(mean=mean, std=std, cov=cov, valid_days=count, invalid=invalid, infinite=infinite, days=len(daily))
