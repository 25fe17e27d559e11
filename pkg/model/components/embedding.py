from typing import Dict, Iterable

import torch
import torch.nn as nn

from errors import DimensionError
from model.core import gather_rows, matmul


class EmbeddingSuite(nn.Module):
    """Variate tokens plus the channel, phase and joint channel-phase tables.

    Tables (all rows of width ``embedding_dim``):
      - ``token_weight`` ``[L, d]`` and ``token_bias`` ``[d]``
      - ``channel_table`` ``[C, d]``
      - ``phase_table`` ``[P, d]``
      - ``joint_table`` ``[C*P, d]``, row ``i*P + phase`` belongs to channel ``i``

    An ablated table is held at zeros with ``requires_grad=False`` and skipped in
    the forward pass, which is the same as adding its zero rows.
    """
    def __init__(self, lookback: int, channels: int, period: int, embedding_dim: int, ablation: Iterable[str] = (), init_std: float = 0.02) -> None:
        super().__init__()
        self.lookback = lookback
        self.channels = channels
        self.period = period
        self.embedding_dim = embedding_dim
        self.ablation = frozenset(ablation)

        self.token_weight = nn.Parameter(torch.randn(lookback, embedding_dim) * init_std)
        self.token_bias = nn.Parameter(torch.randn(embedding_dim) * init_std)

        self.channel_table = self._table('channel', channels, init_std)
        self.phase_table = self._table('phase', period, init_std)
        self.joint_table = self._table('joint', channels * period, init_std)

    def _table(self, name: str, rows: int, init_std: float) -> nn.Parameter:
        if name in self.ablation:
            return nn.Parameter(torch.zeros(rows, self.embedding_dim), requires_grad=False)
        return nn.Parameter(torch.randn(rows, self.embedding_dim) * init_std)

    def variate_tokenize(self, x: torch.Tensor) -> torch.Tensor:
        # x: [..., L, C] -> [..., C, d]
        if x.size(-2) != self.lookback:
            raise DimensionError(f"lookback axis has {x.size(-2)} steps, tokenizer expects {self.lookback}")
        return matmul(x.transpose(-1, -2), self.token_weight) + self.token_bias

    def embed_channels(self) -> torch.Tensor:
        return gather_rows(self.channel_table, torch.arange(self.channels))

    def embed_phase(self, t_last: torch.Tensor) -> torch.Tensor:
        # t_last: [...] -> [..., C, d], one phase row shared by every channel
        phase = torch.remainder(torch.as_tensor(t_last, dtype=torch.long), self.period)
        rows = gather_rows(self.phase_table, phase)
        return rows.unsqueeze(-2).expand(*phase.shape, self.channels, self.embedding_dim)

    def embed_joint(self, t_last: torch.Tensor) -> torch.Tensor:
        phase = torch.remainder(torch.as_tensor(t_last, dtype=torch.long), self.period)
        indices = torch.arange(self.channels) * self.period + phase.unsqueeze(-1)
        return gather_rows(self.joint_table, indices)

    @staticmethod
    def fuse(*parts: torch.Tensor) -> torch.Tensor:
        shape = parts[0].shape
        for part in parts[1:]:
            if part.shape != shape:
                raise DimensionError(f"cannot fuse embeddings of shapes {tuple(shape)} and {tuple(part.shape)}")
        fused = parts[0]
        for part in parts[1:]:
            fused = fused + part
        return fused

    def forward(self, x: torch.Tensor, t_last: torch.Tensor) -> torch.Tensor:
        token = self.variate_tokenize(x)
        parts = [token]
        if 'channel' not in self.ablation:
            parts.append(self.embed_channels().expand_as(token))
        if 'phase' not in self.ablation:
            parts.append(self.embed_phase(t_last))
        if 'joint' not in self.ablation:
            parts.append(self.embed_joint(t_last))
        return self.fuse(*parts)

    def tables(self) -> Dict[str, torch.Tensor]:
        return {
            'channel': self.channel_table.detach(),
            'phase': self.phase_table.detach(),
            'joint': self.joint_table.detach().reshape(self.channels, self.period, self.embedding_dim)
        }
