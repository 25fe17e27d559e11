import torch
import torch.nn as nn
from typing import Callable, Optional, Tuple

from errors import ContractError
from model.utils.attention import AttentionRecord
from model.utils.layer import EncoderLayer


class Encoder(nn.Module):
    """Stack of ``n`` encoder layers over the C variate tokens.

    No mask and no positional encoding: tokens are channels, and channel identity
    is supplied by the embedding suite.
    """
    def __init__(self, n: int, embedding_dim: int, heads: int, d_ff: int, dropout_rate: float, eps: float, activation: Callable[[torch.Tensor], torch.Tensor], norm_style: str = 'post'):
        super().__init__()
        if n < 1:
            raise ContractError(f"encoder needs at least one layer, got n={n}")
        self.encoder_layers = nn.ModuleList([EncoderLayer(embedding_dim=embedding_dim, heads=heads, d_ff=d_ff, dropout_rate=dropout_rate, eps=eps, activation=activation, norm_style=norm_style) for _ in range(n)])

    def forward(self, x: torch.Tensor, capture_last: bool = False) -> Tuple[torch.Tensor, Optional[AttentionRecord]]:
        record = None
        last = len(self.encoder_layers) - 1
        for index, layer in enumerate(self.encoder_layers):
            capture = capture_last and index == last
            x, layer_record = layer(x, capture=capture, layer=index + 1)
            if capture:
                record = layer_record

        return x, record
