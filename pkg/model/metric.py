from typing import Callable, Tuple

import torch

from errors import ContractError, DimensionError
from preprocessing.series import WindowSet


class ForecastMetric:
    """Running MSE/MAE over every element of every window seen."""
    def __init__(self) -> None:
        self.squared = 0.0
        self.absolute = 0.0
        self.count = 0

    def update(self, outputs: torch.Tensor, labels: torch.Tensor) -> None:
        if outputs.shape != labels.shape:
            raise DimensionError(f"forecast shape {tuple(outputs.shape)} does not match target {tuple(labels.shape)}")
        error = outputs.detach() - labels
        self.squared += float((error * error).sum())
        self.absolute += float(error.abs().sum())
        self.count += error.numel()

    def score(self) -> Tuple[float, float]:
        if self.count == 0:
            raise ContractError("no forecasts were scored")
        return self.squared / self.count, self.absolute / self.count


@torch.no_grad()
def evaluate(model: Callable[[torch.Tensor, torch.Tensor], torch.Tensor], windows: WindowSet, batch_size: int = 32) -> Tuple[float, float]:
    """(MSE, MAE) of ``model`` over ``windows``; modules are switched to eval mode."""
    if len(windows) == 0:
        raise ContractError("cannot evaluate on an empty window set")
    if isinstance(model, torch.nn.Module):
        model.eval()
    x, y, t_last = windows.tensors()
    metric = ForecastMetric()
    for start in range(0, len(windows), batch_size):
        stop = start + batch_size
        metric.update(model(x[start:stop], t_last[start:stop]), y[start:stop])
    return metric.score()
