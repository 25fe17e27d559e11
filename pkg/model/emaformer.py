import json
import logging
import math
import random
import time
from pathlib import Path
from typing import Dict, NamedTuple, Optional, Tuple, Union

import numpy as np
import torch
import torch.nn as nn
from torch.utils.data import DataLoader, TensorDataset

from dictionary import activation_dict
from errors import CheckpointError, ConfigurationError, ContractError, DimensionError, DivergenceError
from model.components.embedding import EmbeddingSuite
from model.components.encoder import Encoder
from model.components.head import PredictionHead
from model.config import ModelConfig
from model.core import backward
from model.history import EpochRecord, TrainReport
from model.loss import L1Loss
from model.metric import evaluate
from model.optimizer import ClippedAdam
from model.utils.attention import AttentionRecord
from model.utils.revin import InstanceNormalization
from preprocessing.series import WindowSet

logger = logging.getLogger(__name__)


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)


class Forecast(NamedTuple):
    y: torch.Tensor
    y_pre: torch.Tensor
    record: Optional[AttentionRecord]


class EMAformerModel(nn.Module):
    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        if config.activation not in activation_dict:
            raise ConfigurationError(f"activation: expected one of {sorted(activation_dict)}, got {config.activation!r}")
        activation = activation_dict[config.activation]
        self.config = config

        self.revin = InstanceNormalization()
        self.embedding = EmbeddingSuite(lookback=config.lookback, channels=config.channels, period=config.period, embedding_dim=config.embedding_dim, ablation=config.ablation)
        self.encoder = None
        if config.backbone == 'transformer':
            self.encoder = Encoder(n=config.n, embedding_dim=config.embedding_dim, heads=config.heads, d_ff=config.d_ff, dropout_rate=config.dropout_rate, eps=config.eps, activation=activation, norm_style=config.norm_style)
        self.head = PredictionHead(embedding_dim=config.embedding_dim, horizon=config.horizon, d_ff=config.d_ff, activation=activation, head=config.head)

    def forecast(self, x: torch.Tensor, t_last: torch.Tensor, capture: bool = False) -> Forecast:
        """Forecast ``[..., H, C]`` from lookback ``[..., L, C]`` ending at absolute step ``t_last``."""
        expected = (self.config.lookback, self.config.channels)
        if tuple(x.shape[-2:]) != expected:
            raise DimensionError(f"lookback of shape {tuple(x.shape)} does not end in {expected}")

        stats = None
        if self.config.revin:
            x, stats = self.revin.normalize(x)
        if self.config.mean_input:
            # the z-scored mean of every channel
            x = torch.zeros_like(x)

        z = self.embedding(x, t_last)

        record = None
        if self.encoder is not None:
            z, record = self.encoder(z, capture_last=capture)
        elif capture:
            raise ContractError("the mlp_only backbone has no attention to capture")

        y_pre = self.head(z)
        y = self.revin.denormalize(y_pre, stats) if stats is not None else y_pre
        return Forecast(y=y, y_pre=y_pre, record=record)

    def forward(self, x: torch.Tensor, t_last: torch.Tensor) -> torch.Tensor:
        return self.forecast(x, t_last).y

    def summary(self) -> Dict[str, int]:
        counts = {
            'token': self.embedding.token_weight.numel() + self.embedding.token_bias.numel(),
            'channel': self.embedding.channel_table.numel(),
            'phase': self.embedding.phase_table.numel(),
            'joint': self.embedding.joint_table.numel(),
            'encoder': sum(p.numel() for p in self.encoder.parameters()) if self.encoder is not None else 0,
            'head': sum(p.numel() for p in self.head.parameters())
        }
        counts['trainable'] = sum(p.numel() for p in self.parameters() if p.requires_grad)
        return counts


def checkpoint_stem(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_suffix('') if path.suffix in ('.bin', '.json') else path


def write_checkpoint(state: Dict[str, torch.Tensor], config: ModelConfig, path: Union[str, Path]) -> Path:
    """Raw little-endian float64 parameters plus a JSON manifest of names and shapes."""
    stem = checkpoint_stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    manifest = {'dtype': 'float64', 'byteorder': 'little', 'config': config.to_dict(), 'tensors': []}
    offset = 0
    with open(stem.with_suffix('.bin'), 'wb') as file:
        for name, tensor in state.items():
            array = np.ascontiguousarray(tensor.detach().cpu().numpy(), dtype='<f8')
            manifest['tensors'].append({'name': name, 'shape': list(array.shape), 'offset': offset, 'count': int(array.size)})
            offset += int(array.size)
            file.write(array.tobytes())
    stem.with_suffix('.json').write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding='utf-8')
    return stem


def read_checkpoint(path: Union[str, Path], expected: Dict[str, torch.Tensor]) -> Dict[str, torch.Tensor]:
    stem = checkpoint_stem(path)
    manifest_path, data_path = stem.with_suffix('.json'), stem.with_suffix('.bin')
    if not manifest_path.exists() or not data_path.exists():
        raise CheckpointError(f"checkpoint: {stem}.bin/.json not found")
    manifest = json.loads(manifest_path.read_text(encoding='utf-8'))
    shapes = {entry['name']: tuple(entry['shape']) for entry in manifest['tensors']}
    wanted = {name: tuple(tensor.shape) for name, tensor in expected.items()}
    if shapes != wanted:
        differing = sorted(name for name in set(shapes) | set(wanted) if shapes.get(name) != wanted.get(name))
        raise CheckpointError(f"checkpoint: manifest does not match the configured model ({', '.join(differing)})")

    flat = np.fromfile(data_path, dtype='<f8')
    total = sum(entry['count'] for entry in manifest['tensors'])
    if flat.size != total:
        raise CheckpointError(f"checkpoint: {data_path} holds {flat.size} values, manifest lists {total}")
    state = {}
    for entry in manifest['tensors']:
        chunk = flat[entry['offset']:entry['offset'] + entry['count']]
        state[entry['name']] = torch.tensor(chunk.reshape(entry['shape']))
    return state


class EMAformer:
    def __init__(self,
                config: ModelConfig,
                learning_rate: float = 5e-4,
                betas: Tuple[float, float] = (0.9, 0.999),
                adam_eps: float = 1e-8,
                clip_norm: Optional[float] = 5.0,
                checkpoint: Optional[str] = None) -> None:
        seed_everything(config.seed)
        self.config = config
        self.model = EMAformerModel(config)
        self.optimizer = ClippedAdam(self.model.named_parameters(), learning_rate=learning_rate, betas=betas, eps=adam_eps, clip_norm=clip_norm)
        self.criterion = L1Loss()
        self.generator = torch.Generator().manual_seed(config.seed)

        self.checkpoint = checkpoint
        if self.checkpoint is not None:
            self.load_model(self.checkpoint)

    def summary(self) -> Dict[str, int]:
        counts = self.model.summary()
        logger.info("parameters: %s", ", ".join(f"{key}={value}" for key, value in counts.items()))
        return counts

    def build_dataset(self, windows: WindowSet, batch_size: int, shuffle: bool) -> DataLoader:
        dataset = TensorDataset(*windows.tensors())
        return DataLoader(dataset=dataset, batch_size=batch_size, shuffle=shuffle, generator=self.generator if shuffle else None)

    def train_step(self, inputs: torch.Tensor, labels: torch.Tensor, t_last: torch.Tensor) -> float:
        self.optimizer.zero_grad()

        outputs = self.model(inputs, t_last)

        loss = self.criterion(outputs, labels)
        if not torch.isfinite(loss):
            raise DivergenceError(f"training loss became {loss.item()}")
        backward(loss)
        self.optimizer.step()

        return loss.item()

    def evaluate(self, windows: WindowSet, batch_size: int = 32) -> Tuple[float, float]:
        return evaluate(self.model, windows, batch_size)

    @torch.no_grad()
    def predict(self, inputs: torch.Tensor, t_last: torch.Tensor) -> torch.Tensor:
        self.model.eval()
        return self.model(inputs, t_last)

    def snapshot(self) -> Dict[str, torch.Tensor]:
        return {name: tensor.detach().clone() for name, tensor in self.model.state_dict().items()}

    def save_model(self, path: Union[str, Path]) -> Path:
        return write_checkpoint(self.model.state_dict(), self.config, path)

    def load_model(self, path: Union[str, Path]) -> None:
        self.model.load_state_dict(read_checkpoint(path, self.model.state_dict()))

    def fit(self, train: WindowSet, valid: WindowSet, test: Optional[WindowSet] = None, epochs: int = 30, batch_size: int = 32, patience: int = 5, checkpoint: Optional[str] = None) -> TrainReport:
        """Train with early stopping on validation MSE; the best epoch's weights are restored."""
        if len(train) == 0 or len(valid) == 0:
            raise ContractError(f"need training and validation windows, got {len(train)} and {len(valid)}")
        if checkpoint is not None:
            self.checkpoint = checkpoint

        started = time.perf_counter()
        report = TrainReport(config_tag=self.config.config_tag)
        dataloader = self.build_dataset(train, batch_size, shuffle=True)
        best_state = self.snapshot()
        saved = None

        print("epoch, train_l1, valid_mse, valid_mae")
        for epoch in range(1, epochs + 1):
            self.model.train()
            total, count = 0.0, 0
            try:
                for inputs, labels, t_last in dataloader:
                    total += self.train_step(inputs, labels, t_last) * inputs.size(0)
                    count += inputs.size(0)
                valid_mse, valid_mae = self.evaluate(valid, batch_size)
                if not (math.isfinite(valid_mse) and math.isfinite(valid_mae)):
                    raise DivergenceError(f"validation metrics became {valid_mse}/{valid_mae}")
            except DivergenceError as error:
                raise DivergenceError(f"epoch {epoch}: {error}", checkpoint=str(saved) if saved else None) from error

            train_l1 = total / count
            print(f"{epoch}, {train_l1:.6f}, {valid_mse:.6f}, {valid_mae:.6f}")

            if report.add(EpochRecord(epoch=epoch, train_l1=train_l1, valid_mse=valid_mse, valid_mae=valid_mae)):
                best_state = self.snapshot()
                if self.checkpoint is not None:
                    saved = self.save_model(self.checkpoint)
            elif epoch - report.best_epoch >= patience:
                report.stopped_early = True
                logger.info("early stop at epoch %d, best epoch %d", epoch, report.best_epoch)
                break

        self.model.load_state_dict(best_state)
        if test is not None and len(test) > 0:
            report.test_mse, report.test_mae = self.evaluate(test, batch_size)
        report.wall_clock_seconds = time.perf_counter() - started
        return report
