from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from yaml.loader import SafeLoader
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, field_validator, model_validator

from dictionary import DatasetSpec, day_len_dict, horizon_dict, lookup_dataset, period_length, CUSTOM_SPLIT
from errors import ConfigurationError
from model.config import ModelConfig


def load_model_config(path: Union[str, Path]) -> dict:
    try:
        with open(f'{path}', encoding='utf-8') as file:
            data = yaml.load(file, Loader=SafeLoader)
    except FileNotFoundError:
        raise ConfigurationError(f"config: {path} not found")
    except yaml.YAMLError as error:
        raise ConfigurationError(f"config: {path} is not valid YAML ({error})")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"config: {path} must hold a flat key: value mapping")
    return data


def set_parameters(config: dict, overrides: Dict[str, Any]) -> dict:
    """Command-line values win over the file whenever they are given."""
    config = dict(config)
    for param, value in overrides.items():
        if value is not None:
            config[param] = value
    return config


class RunConfig(BaseModel):
    """Every key a run accepts. Unknown keys are rejected."""
    model_config = ConfigDict(extra='forbid')

    # dataset
    dataset_path: Path
    dataset_name: Optional[str] = None
    timestamp_column: bool = True
    start_index: int = Field(0, ge=0)
    period_daily: Optional[PositiveInt] = None
    period_kind: Optional[Literal['daily', 'weekly']] = None
    period: Optional[PositiveInt] = None
    split_ratios: Optional[Tuple[PositiveFloat, PositiveFloat, PositiveFloat]] = None
    lookback_overlap: bool = True
    day_len: Optional[int] = Field(None, ge=2)

    # architecture
    lookback: PositiveInt = 96
    horizon: PositiveInt = 96
    embedding_dim: PositiveInt = 256
    n: PositiveInt = 2
    heads: PositiveInt = 8
    d_ff: PositiveInt = 512
    dropout_rate: float = Field(0.1, ge=0.0, lt=1.0)
    eps: PositiveFloat = 1e-5
    activation: Literal['gelu', 'relu'] = 'gelu'
    norm_style: Literal['post', 'pre'] = 'post'
    revin: bool = True
    ablation: List[Literal['channel', 'phase', 'joint']] = Field(default_factory=list)
    backbone: Literal['transformer', 'mlp_only'] = 'transformer'
    head: Literal['mlp', 'linear'] = 'mlp'
    mean_input: bool = False
    seed: int = 2024

    # trainer
    learning_rate: float = Field(5e-4, ge=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    adam_eps: PositiveFloat = 1e-8
    batch_size: PositiveInt = 32
    epochs: PositiveInt = 30
    patience: PositiveInt = 5
    clip_norm: Optional[PositiveFloat] = 5.0

    # output
    out_dir: Path = Path('./runs/default')
    dump_forecasts: bool = False
    horizons: Union[Literal['standard'], List[PositiveInt], None] = None

    @field_validator('dataset_path')
    @classmethod
    def dataset_must_exist(cls, value: Path) -> Path:
        if not value.is_file():
            raise ValueError(f"file {value} not found")
        return value

    @field_validator('split_ratios')
    @classmethod
    def ratios_sum_to_one(cls, value):
        if value is not None and abs(sum(value) - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {sum(value)}")
        return value

    @model_validator(mode='after')
    def architecture_consistent(self) -> "RunConfig":
        if self.embedding_dim % self.heads != 0:
            raise ValueError(f"embedding_dim: {self.embedding_dim} is not divisible by heads={self.heads}")
        if self.d_ff < self.embedding_dim:
            raise ValueError(f"d_ff: must be at least embedding_dim={self.embedding_dim}")
        if self.dataset_spec is None and self.period_daily is None:
            raise ValueError(f"period_daily: dataset {self.name!r} is not a known benchmark, set it explicitly")
        return self

    @property
    def name(self) -> str:
        return self.dataset_name or self.dataset_path.stem

    @property
    def dataset_spec(self) -> Optional[DatasetSpec]:
        return lookup_dataset(self.name)

    def resolved_period_daily(self) -> int:
        if self.period_daily is not None:
            return self.period_daily
        return self.dataset_spec.period_daily

    def resolved_period(self) -> int:
        if self.period is not None:
            return self.period
        kind = self.period_kind or (self.dataset_spec.period_kind if self.dataset_spec else 'daily')
        return period_length(self.resolved_period_daily(), kind)

    def resolved_split(self) -> Tuple[float, float, float]:
        if self.split_ratios is not None:
            return self.split_ratios
        return self.dataset_spec.split_ratios if self.dataset_spec else CUSTOM_SPLIT

    def resolved_day_len(self) -> int:
        if self.day_len is not None:
            return self.day_len
        spec = self.dataset_spec
        if spec is not None:
            return day_len_dict[spec.frequency]
        return self.resolved_period_daily()

    def resolved_horizons(self) -> List[int]:
        if self.horizons == 'standard':
            return list(self.standard_horizons(self.name))
        if self.horizons:
            return list(self.horizons)
        return [self.horizon]

    @staticmethod
    def standard_horizons(name: str) -> Tuple[int, ...]:
        return horizon_dict['pems' if name.upper().startswith('PEMS') else 'default']

    def to_model_config(self, channels: int, horizon: Optional[int] = None) -> ModelConfig:
        return ModelConfig(
            lookback=self.lookback,
            horizon=horizon or self.horizon,
            channels=channels,
            period=self.resolved_period(),
            embedding_dim=self.embedding_dim,
            n=self.n,
            heads=self.heads,
            d_ff=self.d_ff,
            dropout_rate=self.dropout_rate,
            eps=self.eps,
            activation=self.activation,
            norm_style=self.norm_style,
            revin=self.revin,
            ablation=frozenset(self.ablation),
            backbone=self.backbone,
            head=self.head,
            mean_input=self.mean_input,
            seed=self.seed
        )


def format_validation_error(error: ValidationError) -> str:
    messages = []
    for item in error.errors():
        key = '.'.join(str(part) for part in item['loc'])
        message = item['msg'].removeprefix('Value error, ')
        messages.append(f"{key}: {message}" if key else message)
    return '; '.join(messages)


def build_run_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    config = set_parameters(load_model_config(path), overrides or {})
    try:
        return RunConfig.model_validate(config)
    except ValidationError as error:
        raise ConfigurationError(format_validation_error(error)) from error


def save_config(config: RunConfig, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as file:
        yaml.safe_dump(config.model_dump(mode='json'), file, sort_keys=False)
