import torch

# the whole engine runs in 64-bit floats
torch.set_default_dtype(torch.float64)
