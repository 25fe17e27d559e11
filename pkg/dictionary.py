from typing import Callable, Dict, NamedTuple, Tuple

import torch

from model.core import gelu, relu


activation_dict: Dict[str, Callable[[torch.Tensor], torch.Tensor]] = {
    'gelu': gelu,
    'relu': relu
}


class DatasetSpec(NamedTuple):
    channels: int
    steps: int
    frequency: str
    period_daily: int
    period_kind: str
    split_ratios: Tuple[float, float, float]


ETT_SPLIT = (0.6, 0.2, 0.2)
CUSTOM_SPLIT = (0.7, 0.1, 0.2)
PEMS_SPLIT = (0.6, 0.2, 0.2)

# Benchmark statistics; period_kind is the better of daily/weekly per dataset.
dataset_dict: Dict[str, DatasetSpec] = {
    'ETTh1': DatasetSpec(7, 14400, '1h', 24, 'daily', ETT_SPLIT),
    'ETTh2': DatasetSpec(7, 14400, '1h', 24, 'daily', ETT_SPLIT),
    'ETTm1': DatasetSpec(7, 57600, '15min', 96, 'daily', ETT_SPLIT),
    'ETTm2': DatasetSpec(7, 57600, '15min', 96, 'daily', ETT_SPLIT),
    'ECL': DatasetSpec(321, 26304, '1h', 24, 'weekly', CUSTOM_SPLIT),
    'Solar': DatasetSpec(137, 52560, '10min', 144, 'daily', CUSTOM_SPLIT),
    'Traffic': DatasetSpec(862, 17544, '1h', 24, 'weekly', CUSTOM_SPLIT),
    'Weather': DatasetSpec(21, 52696, '10min', 144, 'daily', CUSTOM_SPLIT),
    'PEMS03': DatasetSpec(358, 26208, '5min', 288, 'daily', PEMS_SPLIT),
    'PEMS04': DatasetSpec(307, 16992, '5min', 288, 'daily', PEMS_SPLIT),
    'PEMS07': DatasetSpec(883, 28224, '5min', 288, 'daily', PEMS_SPLIT),
    'PEMS08': DatasetSpec(170, 17856, '5min', 288, 'daily', PEMS_SPLIT),
}

day_len_dict: Dict[str, int] = {
    '1h': 24,
    '15min': 96,
    '10min': 144,
    '5min': 288
}

horizon_dict: Dict[str, Tuple[int, ...]] = {
    'default': (96, 192, 336, 720),
    'pems': (12, 24, 48, 96)
}


# file stems the benchmark archives ship with
alias_dict: Dict[str, str] = {
    'electricity': 'ECL',
    'solar_al': 'Solar',
    'solar': 'Solar',
    'traffic': 'Traffic',
    'weather': 'Weather'
}


def lookup_dataset(name: str) -> DatasetSpec | None:
    name = alias_dict.get(name.lower(), name)
    for key, spec in dataset_dict.items():
        if key.lower() == name.lower():
            return spec
    return None


def period_length(period_daily: int, period_kind: str) -> int:
    if period_kind == 'weekly':
        return 7 * period_daily
    return period_daily
