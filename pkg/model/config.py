from dataclasses import asdict, dataclass, field
from typing import FrozenSet

from errors import ConfigurationError

EMBEDDINGS = ('channel', 'phase', 'joint')
NORM_STYLES = ('post', 'pre')
BACKBONES = ('transformer', 'mlp_only')
HEADS = ('mlp', 'linear')


@dataclass(frozen=True)
class ModelConfig:
    """Architecture of one forecaster. ``ablation`` names the embeddings turned off."""
    lookback: int
    horizon: int
    channels: int
    period: int
    embedding_dim: int = 256
    n: int = 2
    heads: int = 8
    d_ff: int = 512
    dropout_rate: float = 0.1
    eps: float = 1e-5
    activation: str = 'gelu'
    norm_style: str = 'post'
    revin: bool = True
    ablation: FrozenSet[str] = field(default_factory=frozenset)
    backbone: str = 'transformer'
    head: str = 'mlp'
    mean_input: bool = False
    seed: int = 2024

    def __post_init__(self) -> None:
        object.__setattr__(self, 'ablation', frozenset(self.ablation))
        for key in ('lookback', 'horizon', 'channels', 'period', 'embedding_dim', 'n', 'heads', 'd_ff'):
            if getattr(self, key) <= 0:
                raise ConfigurationError(f"{key}: must be positive, got {getattr(self, key)}")
        if self.embedding_dim % self.heads != 0:
            raise ConfigurationError(f"embedding_dim: {self.embedding_dim} is not divisible by heads={self.heads}")
        if self.d_ff < self.embedding_dim:
            raise ConfigurationError(f"d_ff: must be at least embedding_dim={self.embedding_dim}, got {self.d_ff}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError(f"dropout_rate: must lie in [0, 1), got {self.dropout_rate}")
        if self.norm_style not in NORM_STYLES:
            raise ConfigurationError(f"norm_style: expected one of {NORM_STYLES}, got {self.norm_style!r}")
        if self.backbone not in BACKBONES:
            raise ConfigurationError(f"backbone: expected one of {BACKBONES}, got {self.backbone!r}")
        if self.head not in HEADS:
            raise ConfigurationError(f"head: expected one of {HEADS}, got {self.head!r}")
        unknown = self.ablation - set(EMBEDDINGS)
        if unknown:
            raise ConfigurationError(f"ablation: unknown embeddings {sorted(unknown)}")

    @property
    def config_tag(self) -> str:
        enabled = [name for name in EMBEDDINGS if name not in self.ablation]
        if not enabled:
            return 'token-only'
        if len(enabled) == len(EMBEDDINGS):
            return 'full'
        return '+'.join(['token', *enabled])

    def to_dict(self) -> dict:
        data = asdict(self)
        data['ablation'] = sorted(self.ablation)
        return data
