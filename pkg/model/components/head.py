import torch
import torch.nn as nn
from typing import Callable

from model.utils.linear import Linear


class PredictionHead(nn.Module):
    """Per-token projection ``d -> H`` followed by the transpose to ``[H, C]``.

    ``mlp`` uses one hidden layer of width ``d_ff``; ``linear`` is a single map.
    """
    def __init__(self, embedding_dim: int, horizon: int, d_ff: int, activation: Callable[[torch.Tensor], torch.Tensor], head: str = 'mlp') -> None:
        super().__init__()
        self.head = head
        if head == 'mlp':
            self.hidden_layer = Linear(in_features=embedding_dim, out_features=d_ff)
            self.activation = activation
            self.output_layer = Linear(in_features=d_ff, out_features=horizon)
        else:
            self.output_layer = Linear(in_features=embedding_dim, out_features=horizon)

    def project(self, x: torch.Tensor) -> torch.Tensor:
        # [..., C, d] -> [..., C, H]
        if self.head == 'mlp':
            x = self.activation(self.hidden_layer(x))
        return self.output_layer(x)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.project(x).transpose(-1, -2)
