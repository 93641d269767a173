""" Multi-head scaled dot-product self attention
"""
from typing import Any

import flax.linen as nn
import jax.numpy as jnp

from rfsf.common.errors import ConfigError
from rfsf.common.tensor_core import softmax_stable
from .linear import linear

Dtype = Any


class MultiHeadSelfAttention(nn.Module):
    """ softmax(Q K^T / sqrt(d_head)) V per head, heads concatenated and projected

    Input and output are [..., t, d].
    """
    num_heads: int = 8
    dtype: Dtype = jnp.float64

    @nn.compact
    def __call__(self, x):
        *batch, t, d = x.shape
        if d % self.num_heads:
            raise ConfigError(f'model dim {d} is not divisible by {self.num_heads} heads')
        head_dim = d // self.num_heads
        split = lambda y: y.reshape(*batch, t, self.num_heads, head_dim)
        q = split(linear(d, dtype=self.dtype, name='query')(x))
        k = split(linear(d, dtype=self.dtype, name='key')(x))
        v = split(linear(d, dtype=self.dtype, name='value')(x))

        scores = jnp.einsum('...qhc,...khc->...hqk', q, k) / jnp.sqrt(head_dim).astype(self.dtype)
        attn = softmax_stable(scores, axis=-1)
        self.sow('intermediates', 'attention', attn)
        out = jnp.einsum('...hqk,...khc->...qhc', attn, v).reshape(*batch, t, d)
        return linear(d, dtype=self.dtype, name='out')(out)
