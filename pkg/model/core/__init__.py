from model.core.functional import matmul, softmax_rows, layer_norm, gather_rows, gelu, relu
from model.core.tape import GradientTape, backward

__all__ = ["matmul", "softmax_rows", "layer_norm", "gather_rows", "gelu", "relu", "GradientTape", "backward"]
