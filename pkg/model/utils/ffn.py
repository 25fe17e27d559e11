import torch
import torch.nn as nn
from typing import Callable

from model.utils.linear import Linear


class PositionWiseFeedForward(nn.Module):
    def __init__(self, d_ff: int, embedding_dim: int, activation: Callable[[torch.Tensor], torch.Tensor], dropout_rate: float = 0.0) -> None:
        super().__init__()
        self.hidden_layer = Linear(in_features=embedding_dim, out_features=d_ff)
        self.activation = activation
        self.dropout_layer = nn.Dropout(p=dropout_rate)
        self.output_layer = Linear(in_features=d_ff, out_features=embedding_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.hidden_layer(x)
        x = self.activation(x)
        x = self.dropout_layer(x)
        x = self.output_layer(x)

        return x
