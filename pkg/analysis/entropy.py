import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import torch

from errors import ContractError
from model.emaformer import EMAformerModel
from preprocessing.series import WindowSet


def row_entropy(attention: torch.Tensor) -> torch.Tensor:
    """Base-2 entropy of every row of ``attention[..., C, C]``, with 0 log 0 = 0."""
    entropy = -torch.special.xlogy(attention, attention).sum(dim=-1) / math.log(2.0)
    return entropy.clamp(min=0.0, max=math.log2(attention.size(-1)))


@dataclass
class EntropyReport:
    row_entropies: torch.Tensor
    h_avg: float
    h_max: float
    config_tag: str
    windows: int

    def to_dict(self) -> dict:
        return {
            'row_entropies': self.row_entropies.tolist(),
            'h_avg': self.h_avg,
            'h_max': self.h_max,
            'config_tag': self.config_tag,
            'windows': self.windows
        }

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding='utf-8')


def entropy_report(mean_attention: torch.Tensor, config_tag: str = 'full') -> EntropyReport:
    """Report over head-averaged maps ``[N, C, C]`` (or one ``[C, C]`` map)."""
    if mean_attention.dim() == 2:
        mean_attention = mean_attention.unsqueeze(0)
    rows = row_entropy(mean_attention).mean(dim=0)
    return EntropyReport(
        row_entropies=rows,
        h_avg=float(rows.mean()),
        h_max=math.log2(mean_attention.size(-1)),
        config_tag=config_tag,
        windows=mean_attention.size(0)
    )


@torch.no_grad()
def attention_entropy(model: EMAformerModel, windows: WindowSet, batch_size: int = 32) -> EntropyReport:
    """Entropy of the last layer's head-averaged attention over every phase-0 window."""
    phase_zero = windows.filter_phase(0)
    if len(phase_zero) == 0:
        raise ContractError(f"no window ends at phase 0 of period {windows.period} in this split")
    model.eval()
    x, _, t_last = phase_zero.tensors()
    maps = []
    for start in range(0, len(phase_zero), batch_size):
        stop = start + batch_size
        maps.append(model.forecast(x[start:stop], t_last[start:stop], capture=True).record.mean)
    return entropy_report(torch.cat(maps), config_tag=model.config.config_tag)
