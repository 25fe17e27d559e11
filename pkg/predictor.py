from pathlib import Path
from typing import List, Optional, Tuple, Union

import pandas as pd

from data import PreparedData, prepare_data
from model.emaformer import EMAformer
from preprocessing.series import Split
from util import RunConfig


class Predictor:
    """A trained forecaster bound to the data it was configured for."""
    def __init__(self, config: RunConfig, checkpoint: str, horizon: Optional[int] = None) -> None:
        self.config = config
        self.data: PreparedData = prepare_data(config, horizon)
        model_config = config.to_model_config(channels=self.data.dataset.channels, horizon=horizon)
        self.model = EMAformer(model_config, checkpoint=checkpoint)

    def evaluate(self, split: Split = Split.TEST) -> Tuple[float, float]:
        return self.model.evaluate(self.data.windows[split], self.config.batch_size)

    def dump(self, out_dir: Union[str, Path], split: Split = Split.TEST) -> List[Path]:
        """One CSV per window batch: a row per (window, horizon step), one column per channel."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        windows = self.data.windows[split]
        x, _, t_last = windows.tensors()
        columns = list(self.data.dataset.columns)
        paths = []
        batch_size = self.config.batch_size
        for batch, start in enumerate(range(0, len(windows), batch_size)):
            stop = start + batch_size
            forecast = self.model.predict(x[start:stop], t_last[start:stop])
            frames = []
            for window, values in zip(t_last[start:stop].tolist(), forecast):
                frame = pd.DataFrame(values.numpy(), columns=columns)
                frame.insert(0, 'step', range(1, values.size(0) + 1))
                frame.insert(0, 't_last', window)
                frames.append(frame)
            path = out_dir / f'forecast_{batch:05d}.csv'
            pd.concat(frames, ignore_index=True).to_csv(path, index=False, float_format='%.17g')
            paths.append(path)
        return paths
