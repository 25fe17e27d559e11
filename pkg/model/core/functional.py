import math
from typing import Sequence, Union

import torch
from torch.autograd import Function

from errors import DimensionError, LookupIndexError
from model.core import tape


class MatMul(Function):
    @staticmethod
    def forward(ctx, a: torch.Tensor, b: torch.Tensor, handle: tape.TapeHandle) -> torch.Tensor:
        ctx.save_for_backward(a, b)
        ctx.handle = handle
        return torch.matmul(a, b)

    @staticmethod
    def backward(ctx, grad: torch.Tensor):
        a, b = ctx.saved_tensors
        tape.visit(ctx.handle)
        grad_a = grad_b = None
        if ctx.needs_input_grad[0]:
            grad_a = torch.matmul(grad, b.transpose(-1, -2))
        if ctx.needs_input_grad[1]:
            if b.dim() == 2 and a.dim() > 2:
                # shared weight: sum the per-sample contributions
                grad_b = torch.matmul(a.reshape(-1, a.size(-1)).transpose(0, 1), grad.reshape(-1, grad.size(-1)))
            else:
                grad_b = torch.matmul(a.transpose(-1, -2), grad)
        return grad_a, grad_b, None


class SoftmaxRows(Function):
    @staticmethod
    def forward(ctx, a: torch.Tensor, handle: tape.TapeHandle) -> torch.Tensor:
        shifted = a - a.amax(dim=-1, keepdim=True)
        exps = torch.exp(shifted)
        output = exps / exps.sum(dim=-1, keepdim=True)
        ctx.save_for_backward(output)
        ctx.handle = handle
        return output

    @staticmethod
    def backward(ctx, grad: torch.Tensor):
        output, = ctx.saved_tensors
        tape.visit(ctx.handle)
        return output * (grad - (grad * output).sum(dim=-1, keepdim=True)), None


class LayerNormOp(Function):
    @staticmethod
    def forward(ctx, a: torch.Tensor, gain: torch.Tensor, bias: torch.Tensor, eps: float, handle: tape.TapeHandle) -> torch.Tensor:
        centered = a - a.mean(dim=-1, keepdim=True)
        variance = (centered * centered).mean(dim=-1, keepdim=True)
        inv_std = 1.0 / torch.sqrt(variance + eps)
        normalized = centered * inv_std
        ctx.save_for_backward(normalized, inv_std, gain)
        ctx.handle = handle
        return normalized * gain + bias

    @staticmethod
    def backward(ctx, grad: torch.Tensor):
        normalized, inv_std, gain = ctx.saved_tensors
        tape.visit(ctx.handle)
        dim = normalized.size(-1)
        grad_normalized = grad * gain
        grad_a = inv_std * (
            grad_normalized
            - grad_normalized.mean(dim=-1, keepdim=True)
            - normalized * (grad_normalized * normalized).mean(dim=-1, keepdim=True)
        )
        grad_gain = (grad * normalized).reshape(-1, dim).sum(dim=0)
        grad_bias = grad.reshape(-1, dim).sum(dim=0)
        return grad_a, grad_gain, grad_bias, None, None


class GatherRows(Function):
    @staticmethod
    def forward(ctx, table: torch.Tensor, indices: torch.Tensor, handle: tape.TapeHandle) -> torch.Tensor:
        ctx.save_for_backward(indices)
        ctx.table_shape = table.shape
        ctx.handle = handle
        return table[indices]

    @staticmethod
    def backward(ctx, grad: torch.Tensor):
        indices, = ctx.saved_tensors
        tape.visit(ctx.handle)
        rows, dim = ctx.table_shape
        grad_table = grad.new_zeros((rows, dim))
        grad_table.index_add_(0, indices.reshape(-1), grad.reshape(-1, dim))
        return grad_table, None, None


class GELU(Function):
    @staticmethod
    def forward(ctx, a: torch.Tensor, handle: tape.TapeHandle) -> torch.Tensor:
        cdf = 0.5 * (1.0 + torch.erf(a / math.sqrt(2.0)))
        ctx.save_for_backward(a, cdf)
        ctx.handle = handle
        return a * cdf

    @staticmethod
    def backward(ctx, grad: torch.Tensor):
        a, cdf = ctx.saved_tensors
        tape.visit(ctx.handle)
        pdf = torch.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi)
        return grad * (cdf + a * pdf), None


class ReLU(Function):
    @staticmethod
    def forward(ctx, a: torch.Tensor, handle: tape.TapeHandle) -> torch.Tensor:
        ctx.save_for_backward(a)
        ctx.handle = handle
        return a.clamp_min(0.0)

    @staticmethod
    def backward(ctx, grad: torch.Tensor):
        a, = ctx.saved_tensors
        tape.visit(ctx.handle)
        return grad * (a > 0).to(grad.dtype), None


def matmul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Matrix product over the last two axes.

    ``a`` may carry leading batch axes. ``b`` is either a 2-D matrix shared
    across the batch or has exactly the same leading axes as ``a``.
    """
    if a.dim() < 2 or b.dim() < 2:
        raise DimensionError(f"matmul needs matrices, got {tuple(a.shape)} and {tuple(b.shape)}")
    if a.size(-1) != b.size(-2):
        raise DimensionError(f"matmul inner dimensions disagree: {tuple(a.shape)} x {tuple(b.shape)}")
    if b.dim() > 2 and a.shape[:-2] != b.shape[:-2]:
        raise DimensionError(f"matmul batch axes disagree: {tuple(a.shape)} x {tuple(b.shape)}")
    return MatMul.apply(a, b, tape.record("matmul", a, b))


def softmax_rows(a: torch.Tensor) -> torch.Tensor:
    return SoftmaxRows.apply(a, tape.record("softmax_rows", a))


def layer_norm(a: torch.Tensor, gain: torch.Tensor, bias: torch.Tensor, eps: float = 1e-5) -> torch.Tensor:
    dim = a.size(-1)
    if dim < 1:
        raise DimensionError("layer_norm needs a non-empty last axis")
    if gain.shape != (dim,) or bias.shape != (dim,):
        raise DimensionError(f"layer_norm affine shapes {tuple(gain.shape)}/{tuple(bias.shape)} do not match last axis {dim}")
    return LayerNormOp.apply(a, gain, bias, eps, tape.record("layer_norm", a, gain, bias))


def gather_rows(table: torch.Tensor, indices: Union[torch.Tensor, Sequence[int]]) -> torch.Tensor:
    """Row lookup; the backward pass scatter-adds into the table gradient."""
    if table.dim() != 2:
        raise DimensionError(f"gather_rows needs a 2-D table, got {tuple(table.shape)}")
    indices = torch.as_tensor(indices, dtype=torch.long, device=table.device)
    if indices.numel() > 0:
        low, high = int(indices.min()), int(indices.max())
        if low < 0 or high >= table.size(0):
            bad = low if low < 0 else high
            raise LookupIndexError(f"row index {bad} outside [0, {table.size(0)})")
    return GatherRows.apply(table, indices, tape.record("gather_rows", table, indices))


def gelu(a: torch.Tensor) -> torch.Tensor:
    return GELU.apply(a, tape.record("gelu", a))


def relu(a: torch.Tensor) -> torch.Tensor:
    return ReLU.apply(a, tape.record("relu", a))
