from .activations import get_act_fn
from .attention import MultiHeadSelfAttention
from .linear import conv1d, conv_transpose1d, linear, layernorm, embed, get_like_padding
