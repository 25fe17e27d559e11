import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Union


@dataclass
class EpochRecord:
    epoch: int
    train_l1: float
    valid_mse: float
    valid_mae: float


@dataclass
class TrainReport:
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_valid_mse: float = float('inf')
    test_mse: Optional[float] = None
    test_mae: Optional[float] = None
    stopped_early: bool = False
    config_tag: str = 'full'
    wall_clock_seconds: float = 0.0

    def add(self, record: EpochRecord) -> bool:
        """Append an epoch; True when it is the new best on validation MSE."""
        self.epochs.append(record)
        if record.valid_mse < self.best_valid_mse:
            self.best_valid_mse = record.valid_mse
            self.best_epoch = record.epoch
            return True
        return False

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding='utf-8')

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TrainReport":
        data = json.loads(Path(path).read_text(encoding='utf-8'))
        data['epochs'] = [EpochRecord(**record) for record in data['epochs']]
        return cls(**data)
