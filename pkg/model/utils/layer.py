import torch
import torch.nn as nn
from typing import Callable, Optional, Tuple

from model.utils.attention import AttentionRecord, MultiHeadAttention
from model.utils.ffn import PositionWiseFeedForward
from model.utils.res import ResidualConnection


class EncoderLayer(nn.Module):
    def __init__(self, embedding_dim: int, heads: int, d_ff: int, dropout_rate: float, eps: float, activation: Callable[[torch.Tensor], torch.Tensor], norm_style: str = 'post') -> None:
        super().__init__()
        self.multi_head_attention = MultiHeadAttention(heads=heads, embedding_dim=embedding_dim, dropout_rate=dropout_rate)
        self.ffn = PositionWiseFeedForward(d_ff=d_ff, embedding_dim=embedding_dim, activation=activation, dropout_rate=dropout_rate)

        self.residual_connection_1 = ResidualConnection(embedding_dim=embedding_dim, eps=eps, norm_style=norm_style)
        self.residual_connection_2 = ResidualConnection(embedding_dim=embedding_dim, eps=eps, norm_style=norm_style)

    def forward(self, x: torch.Tensor, capture: bool = False, layer: int = 0) -> Tuple[torch.Tensor, Optional[AttentionRecord]]:
        # sublayer 1
        sublayer_1, record = self.residual_connection_1(x, lambda z: self.multi_head_attention(z, capture=capture, layer=layer))

        # sublayer 2
        sublayer_2, _ = self.residual_connection_2(sublayer_1, lambda z: (self.ffn(z), None))

        return sublayer_2, record
