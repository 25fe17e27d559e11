from typing import NamedTuple, Tuple

import torch
import torch.nn as nn


class InstanceStats(NamedTuple):
    mean: torch.Tensor
    std: torch.Tensor


class InstanceNormalization(nn.Module):
    """Per-window, per-channel standardization of the lookback and its inverse.

    Non-affine: statistics come from the lookback only and are detached, so the
    network never sees absolute level or scale.
    """
    def __init__(self, std_floor: float = 1e-8) -> None:
        super().__init__()
        self.std_floor = std_floor

    def statistics(self, x: torch.Tensor) -> InstanceStats:
        # x: [..., L, C]
        mean = x.mean(dim=-2, keepdim=True).detach()
        variance = ((x - mean) ** 2).mean(dim=-2, keepdim=True).detach()
        std = torch.sqrt(variance).clamp_min(self.std_floor)
        return InstanceStats(mean=mean, std=std)

    def normalize(self, x: torch.Tensor) -> Tuple[torch.Tensor, InstanceStats]:
        stats = self.statistics(x)
        return (x - stats.mean) / stats.std, stats

    def denormalize(self, y: torch.Tensor, stats: InstanceStats) -> torch.Tensor:
        return y * stats.std + stats.mean
