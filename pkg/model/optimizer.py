import logging
from typing import Iterable, Optional, Tuple

import torch
import torch.nn as nn
import torch.optim as optim

from errors import DivergenceError

logger = logging.getLogger(__name__)


class ClippedAdam:
    """Bias-corrected Adam over the trainable parameters of a module.

    Gradients are checked for non-finite entries, then clipped to a global L2
    norm of ``clip_norm`` (``None`` disables clipping) before the update.
    """
    def __init__(self, named_parameters: Iterable[Tuple[str, nn.Parameter]], learning_rate: float = 5e-4, betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8, clip_norm: Optional[float] = 5.0) -> None:
        self.named_parameters = [(name, param) for name, param in named_parameters if param.requires_grad]
        self.clip_norm = clip_norm
        self._optimizer = optim.Adam([param for _, param in self.named_parameters], lr=learning_rate, betas=betas, eps=eps)

    @property
    def parameters(self):
        return [param for _, param in self.named_parameters]

    def state_of(self, param: nn.Parameter) -> dict:
        return self._optimizer.state[param]

    def zero_grad(self) -> None:
        self._optimizer.zero_grad(set_to_none=False)

    def check_gradients(self) -> None:
        bad = [name for name, param in self.named_parameters if param.grad is not None and not torch.isfinite(param.grad).all()]
        if bad:
            raise DivergenceError(f"non-finite gradients in {', '.join(bad)}")

    def step(self) -> Optional[float]:
        self.check_gradients()
        norm = None
        if self.clip_norm is not None:
            norm = float(nn.utils.clip_grad_norm_(self.parameters, max_norm=self.clip_norm))
            if norm > self.clip_norm:
                logger.debug("clipped gradient norm %.4f to %.1f", norm, self.clip_norm)
        self._optimizer.step()
        return norm
