from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import torch

from errors import ContractError


@dataclass(frozen=True)
class TapeEntry:
    index: int
    name: str
    shapes: Tuple[Tuple[int, ...], ...]


@dataclass
class GradientTape:
    """Ordered record of the tensor-core ops executed inside a ``with`` block.

    Autograd does the actual reverse sweep; the tape only observes it, so that
    ``visits`` lists the entries in the order their backward rules ran.

    Only ops that build graph are recorded: grad mode on and at least one input
    requiring grad. After ``backward`` every entry whose output reaches the loss
    has been visited exactly once.
    """
    entries: List[TapeEntry] = field(default_factory=list)
    visits: List[int] = field(default_factory=list)

    def __enter__(self) -> "GradientTape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _active_tape.reset(self._token)

    def record(self, name: str, *tensors: torch.Tensor) -> int:
        index = len(self.entries)
        self.entries.append(TapeEntry(index=index, name=name, shapes=tuple(tuple(t.shape) for t in tensors)))
        return index

    def visit(self, index: int) -> None:
        self.visits.append(index)

    def names(self) -> List[str]:
        return [entry.name for entry in self.entries]

    def unvisited(self) -> List[TapeEntry]:
        seen = set(self.visits)
        return [entry for entry in self.entries if entry.index not in seen]


_active_tape: ContextVar[Optional[GradientTape]] = ContextVar("gradient_tape", default=None)

TapeHandle = Optional[Tuple[GradientTape, int]]


def record(name: str, *tensors: torch.Tensor) -> TapeHandle:
    tape = _active_tape.get()
    if tape is None or not torch.is_grad_enabled():
        return None
    if not any(t.requires_grad for t in tensors):
        return None
    return tape, tape.record(name, *tensors)


def visit(handle: TapeHandle) -> None:
    if handle is not None:
        tape, index = handle
        tape.visit(index)


def backward(loss: torch.Tensor) -> None:
    """Populate ``.grad`` on every leaf that requires it with d(loss)/d(leaf)."""
    if loss.dim() != 0:
        raise ContractError(f"backward needs a scalar loss, got shape {tuple(loss.shape)}")
    if not loss.requires_grad:
        raise ContractError("loss is not attached to any trainable tensor")
    loss.backward()
