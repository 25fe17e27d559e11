import logging
import re
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional, Sequence, Tuple, Union, overload

import numpy as np
import pandas as pd
import torch
from sklearn.preprocessing import StandardScaler

from dictionary import lookup_dataset
from errors import ConfigurationError, ContractError, ParseError

logger = logging.getLogger(__name__)


class Split(str, Enum):
    TRAIN = 'train'
    VALID = 'valid'
    TEST = 'test'


@dataclass(frozen=True)
class TimeSeriesDataset:
    """A regularly sampled multivariate series ``values[T, C]``.

    Row ``r`` sits at absolute step ``start_index + r``; that step, not a parsed
    timestamp, is what phases are computed from.
    """
    name: str
    values: torch.Tensor
    columns: Tuple[str, ...]
    period_daily: int
    start_index: int = 0
    frequency: Optional[str] = None
    split_bounds: Optional[Tuple[int, int]] = None

    def __post_init__(self) -> None:
        if self.values.dim() != 2 or self.values.size(1) < 1:
            raise ContractError(f"{self.name}: values must be [T, C] with C >= 1, got {tuple(self.values.shape)}")
        if self.period_daily <= 0:
            raise ConfigurationError(f"period_daily: must be positive, got {self.period_daily}")
        if self.split_bounds is not None:
            train_end, valid_end = self.split_bounds
            if not 0 < train_end < valid_end < self.length:
                raise ContractError(f"{self.name}: split bounds {self.split_bounds} do not satisfy 0 < train_end < valid_end < {self.length}")

    @property
    def length(self) -> int:
        return self.values.size(0)

    @property
    def channels(self) -> int:
        return self.values.size(1)

    @property
    def period_weekly(self) -> int:
        return 7 * self.period_daily

    def with_split(self, split_bounds: Tuple[int, int]) -> "TimeSeriesDataset":
        return replace(self, split_bounds=tuple(split_bounds))

    def normalized(self, normalizer: "Normalizer") -> "TimeSeriesDataset":
        return replace(self, values=normalizer.apply(self.values))

    def span(self, split: Union[Split, str]) -> Tuple[int, int]:
        if self.split_bounds is None:
            raise ContractError(f"{self.name}: dataset has not been split")
        train_end, valid_end = self.split_bounds
        split = Split(split)
        if split is Split.TRAIN:
            return 0, train_end
        if split is Split.VALID:
            return train_end, valid_end
        return valid_end, self.length


def _data_row(error: Exception) -> Optional[int]:
    # pandas counts file lines including the header
    match = re.search(r"line (\d+)", str(error))
    return int(match.group(1)) - 1 if match else None


def _undecodable_row(path: Path) -> Optional[int]:
    for line, raw in enumerate(path.read_bytes().splitlines()):
        try:
            raw.decode("utf-8")
        except UnicodeDecodeError:
            return line if line > 0 else None
    return None


def load_csv(path: Union[str, Path], name: Optional[str] = None, timestamp_column: bool = True, period_daily: Optional[int] = None, start_index: int = 0) -> TimeSeriesDataset:
    """Read a header + rows CSV; column 1 is the timestamp unless ``timestamp_column`` is off.

    Parse errors name the 1-based data row (the header is not counted).
    """
    path = Path(path)
    name = name or path.stem
    try:
        # no header inference, so an extra field on the first data row is rejected like any other
        table = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.EmptyDataError:
        raise ParseError(f"{path} is empty")
    except pd.errors.ParserError as error:
        raise ParseError(f"ragged row in {path}: {error}", row=_data_row(error))
    except UnicodeDecodeError as error:
        raise ParseError(f"{path} is not valid UTF-8: {error.reason}", row=_undecodable_row(path))

    frame = table.iloc[1:].reset_index(drop=True)
    frame.columns = list(table.iloc[0])
    if timestamp_column:
        frame = frame.iloc[:, 1:]
    if frame.shape[1] == 0:
        raise ParseError(f"{path} has no channel columns")
    if len(frame) == 0:
        raise ParseError(f"{path} has no data rows")

    numeric = frame.apply(pd.to_numeric, errors='coerce')
    array = numeric.to_numpy(dtype=np.float64)
    bad = ~np.isfinite(array)
    if bad.any():
        row, column = (int(i) for i in np.argwhere(bad)[0])
        raise ParseError(f"non-numeric cell {frame.iat[row, column]!r} in column {frame.columns[column]!r} of {path}", row=row + 1)

    spec = lookup_dataset(name)
    if period_daily is None:
        if spec is None:
            raise ConfigurationError(f"period_daily: unknown for dataset {name!r}, set it explicitly")
        period_daily = spec.period_daily
    frequency = spec.frequency if spec is not None else None

    logger.info("loaded %s: %d rows x %d channels", name, array.shape[0], array.shape[1])
    return TimeSeriesDataset(
        name=name,
        values=torch.tensor(array),
        columns=tuple(str(column) for column in frame.columns),
        period_daily=period_daily,
        start_index=start_index,
        frequency=frequency
    )


def chronological_split(ds: TimeSeriesDataset, ratios: Sequence[float], lookback: int, horizon: int) -> Tuple[int, int]:
    """Contiguous train/valid/test bounds ``(train_end, valid_end)``.

    The test span takes ``floor(T * test)`` rows from the end and validation the
    rows between, as the benchmark pipelines do.
    """
    if len(ratios) != 3 or any(ratio <= 0 for ratio in ratios):
        raise ConfigurationError(f"split_ratios: need three positive ratios, got {tuple(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigurationError(f"split_ratios: must sum to 1, got {sum(ratios)}")

    total = ds.length
    train_end = int(np.floor(total * ratios[0] + 1e-9))
    test_len = int(np.floor(total * ratios[2] + 1e-9))
    valid_end = total - test_len

    need = lookback + horizon
    for split, length in zip(Split, (train_end, valid_end - train_end, total - valid_end)):
        if length < need:
            raise ConfigurationError(f"split_ratios: {split.value} span of {ds.name} has {length} rows, fewer than lookback + horizon = {need}")
    return train_end, valid_end


class Normalizer:
    """Per-channel z-score fitted on training rows; std floored at ``std_floor``."""
    def __init__(self, std_floor: float = 1e-8) -> None:
        self.std_floor = std_floor
        self.scaler = StandardScaler()

    def fit(self, values: torch.Tensor) -> "Normalizer":
        if values.size(0) == 0:
            raise ContractError("cannot fit a normalizer on zero rows")
        self.scaler.fit(values.detach().cpu().numpy())
        self.scaler.scale_ = np.maximum(np.sqrt(self.scaler.var_), self.std_floor)
        return self

    @property
    def mean(self) -> torch.Tensor:
        return torch.tensor(self.scaler.mean_)

    @property
    def std(self) -> torch.Tensor:
        return torch.tensor(self.scaler.scale_)

    def _map(self, values: torch.Tensor, fn) -> torch.Tensor:
        shape = values.shape
        array = values.detach().cpu().numpy().reshape(-1, shape[-1])
        return torch.tensor(fn(array)).reshape(shape)

    def apply(self, values: torch.Tensor) -> torch.Tensor:
        return self._map(values, self.scaler.transform)

    def invert(self, values: torch.Tensor) -> torch.Tensor:
        return self._map(values, self.scaler.inverse_transform)


def fit_normalizer(ds: TimeSeriesDataset, train_only: bool = True) -> Normalizer:
    rows = ds.values
    if train_only:
        _, train_end = ds.span(Split.TRAIN)
        rows = ds.values[:train_end]
    return Normalizer().fit(rows)


@dataclass(frozen=True)
class WindowSample:
    x: torch.Tensor
    y: torch.Tensor
    t_last: int
    phase: int


class WindowSet(Sequence[WindowSample]):
    """Lookback/target windows of one series, addressed by their start rows."""
    def __init__(self, values: torch.Tensor, starts: torch.Tensor, lookback: int, horizon: int, period: int, start_index: int = 0) -> None:
        self.values = values
        self.starts = starts.to(torch.long)
        self.lookback = lookback
        self.horizon = horizon
        self.period = period
        self.start_index = start_index

    def __len__(self) -> int:
        return self.starts.numel()

    @overload
    def __getitem__(self, index: int) -> WindowSample: ...

    @overload
    def __getitem__(self, index: slice) -> "WindowSet": ...

    def __getitem__(self, index):
        if isinstance(index, slice):
            return self.subset(self.starts[index])
        start = int(self.starts[index])
        end = start + self.lookback
        t_last = self.start_index + end - 1
        return WindowSample(
            x=self.values[start:end],
            y=self.values[end:end + self.horizon],
            t_last=t_last,
            phase=t_last % self.period
        )

    def __iter__(self) -> Iterator[WindowSample]:
        for index in range(len(self)):
            yield self[index]

    def subset(self, starts: torch.Tensor) -> "WindowSet":
        return WindowSet(self.values, starts, self.lookback, self.horizon, self.period, self.start_index)

    @property
    def t_last(self) -> torch.Tensor:
        return self.start_index + self.starts + self.lookback - 1

    def phases(self) -> torch.Tensor:
        return torch.remainder(self.t_last, self.period)

    def filter_phase(self, phase: int) -> "WindowSet":
        return self.subset(self.starts[self.phases() == phase])

    def max_target_row(self) -> int:
        if len(self) == 0:
            return -1
        return int(self.starts.max()) + self.lookback + self.horizon - 1

    def tensors(self) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Stacked ``(x [N, L, C], y [N, H, C], t_last [N])``."""
        channels = self.values.size(1)
        if len(self) == 0:
            empty = self.values.new_zeros
            return empty((0, self.lookback, channels)), empty((0, self.horizon, channels)), self.t_last
        frames = self.values.unfold(0, self.lookback + self.horizon, 1)[self.starts]
        frames = frames.transpose(1, 2).contiguous()
        return frames[:, :self.lookback], frames[:, self.lookback:], self.t_last


def make_windows(ds: TimeSeriesDataset, split: Union[Split, str], lookback: int, horizon: int, period: int, stride: int = 1, lookback_overlap: bool = True) -> WindowSet:
    """Every window whose target lies inside ``split``.

    With ``lookback_overlap`` a lookback may reach back into the previous split;
    a target never crosses a split edge. A span too short yields an empty set.
    """
    if lookback <= 0 or horizon <= 0 or period <= 0 or stride <= 0:
        raise ConfigurationError(f"lookback, horizon, period and stride must be positive, got {lookback}, {horizon}, {period}, {stride}")
    low, high = ds.span(split)
    first = max(0, low - lookback) if lookback_overlap else low
    last = high - lookback - horizon
    starts = torch.arange(first, last + 1, stride) if last >= first else torch.zeros(0, dtype=torch.long)
    return WindowSet(ds.values, starts, lookback, horizon, period, ds.start_index)
