from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import torch


def write_table(table: torch.Tensor, name: str, path: Union[str, Path]) -> Path:
    """One CSV row per table row, preceded by a ``# name,RxD`` comment."""
    rows, dim = table.shape
    np.savetxt(path, table.detach().cpu().numpy(), fmt='%.17g', delimiter=',', header=f"{name},{rows}x{dim}", comments='# ')
    return Path(path)


def read_table(path: Union[str, Path]) -> torch.Tensor:
    return torch.tensor(np.loadtxt(path, delimiter=',', comments='#', ndmin=2))


def export_embeddings(tables: Dict[str, torch.Tensor], out_dir: Union[str, Path]) -> List[Path]:
    """Channel and phase tables plus one joint-table slice ``[P, d]`` per channel."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        write_table(tables['channel'], 'channel', out_dir / 'channel.csv'),
        write_table(tables['phase'], 'phase', out_dir / 'phase.csv')
    ]
    for channel, table in enumerate(tables['joint']):
        paths.append(write_table(table, f'joint_channel_{channel}', out_dir / f'joint_channel_{channel}.csv'))
    return paths
