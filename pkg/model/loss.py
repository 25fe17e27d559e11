import torch

from errors import DimensionError


class L1Loss:
    """Mean absolute deviation over every forecast element; subgradient 0 at 0."""
    def loss(self, outputs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
        if outputs.shape != labels.shape:
            raise DimensionError(f"forecast shape {tuple(outputs.shape)} does not match target {tuple(labels.shape)}")
        return torch.abs(outputs - labels).mean()

    __call__ = loss
