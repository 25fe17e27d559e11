import torch
import torch.nn as nn
from typing import Callable, Tuple, TypeVar

from model.utils.norm import LayerNorm

T = TypeVar("T")


class ResidualConnection(nn.Module):
    """Residual sum around a sublayer with the layer norm placed per ``norm_style``.

    post: ``LN(sublayer(x) + x)``; pre: ``sublayer(LN(x)) + x``.
    The sublayer returns ``(output, extra)`` so attention maps can ride along.
    """
    def __init__(self, embedding_dim: int, eps: float, norm_style: str = 'post') -> None:
        super().__init__()
        self.norm_style = norm_style
        self.layer_norm = LayerNorm(embedding_dim=embedding_dim, eps=eps)

    def forward(self, x: torch.Tensor, sublayer: Callable[[torch.Tensor], Tuple[torch.Tensor, T]]) -> Tuple[torch.Tensor, T]:
        if self.norm_style == 'pre':
            output, extra = sublayer(self.layer_norm(x))
            return output + x, extra

        output, extra = sublayer(x)
        return self.layer_norm(output + x), extra
