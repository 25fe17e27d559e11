import math
from dataclasses import dataclass
from typing import Optional, Tuple

import torch
import torch.nn as nn

from errors import ConfigurationError
from model.core import matmul, softmax_rows
from model.utils.linear import Linear


@dataclass
class AttentionRecord:
    """Attention maps of one encoder layer.

    ``heads`` is ``[..., h, C, C]`` (one map per head, leading axes follow the
    input batch) and ``mean`` is the head average ``[..., C, C]``.
    """
    layer: int
    heads: torch.Tensor
    mean: torch.Tensor


class MultiHeadAttention(nn.Module):
    def __init__(self, heads: int, embedding_dim: int, dropout_rate: float = 0.0) -> None:
        super().__init__()
        if embedding_dim % heads != 0:
            raise ConfigurationError(f"embedding_dim {embedding_dim} is not divisible by heads {heads}")
        self.embedding_dim = embedding_dim
        self.heads = heads
        self.head_samples = self.embedding_dim // self.heads

        self.linear_q = Linear(in_features=embedding_dim, out_features=embedding_dim)
        self.linear_k = Linear(in_features=embedding_dim, out_features=embedding_dim)
        self.linear_v = Linear(in_features=embedding_dim, out_features=embedding_dim)

        self.linear_output = Linear(in_features=embedding_dim, out_features=embedding_dim)
        self.dropout_layer = nn.Dropout(p=dropout_rate)

    def scaled_dot_product_attention(self, q: torch.Tensor, k: torch.Tensor, v: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        attention_scores = matmul(q, k.transpose(-1, -2))
        attention_scores = attention_scores / math.sqrt(self.head_samples)

        attention_weights = softmax_rows(attention_scores)

        output = matmul(self.dropout_layer(attention_weights), v)

        return output, attention_weights

    def split(self, x: torch.Tensor) -> torch.Tensor:
        # [..., C, d] -> [..., h, C, d_h]
        x = torch.reshape(x, (*x.shape[:-1], self.heads, self.head_samples))
        return x.transpose(-3, -2)

    def merge(self, x: torch.Tensor) -> torch.Tensor:
        x = x.transpose(-3, -2)
        return torch.reshape(x, (*x.shape[:-2], self.embedding_dim))

    def forward(self, x: torch.Tensor, capture: bool = False, layer: int = 0) -> Tuple[torch.Tensor, Optional[AttentionRecord]]:
        q_heads = self.split(self.linear_q(x))
        k_heads = self.split(self.linear_k(x))
        v_heads = self.split(self.linear_v(x))

        attention_output, attention_weights = self.scaled_dot_product_attention(q_heads, k_heads, v_heads)

        output = self.linear_output(self.merge(attention_output))

        record = None
        if capture:
            weights = attention_weights.detach().clone()
            record = AttentionRecord(layer=layer, heads=weights, mean=weights.mean(dim=-3))

        return output, record
