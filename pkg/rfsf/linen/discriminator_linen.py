""" Channel-attention 1-D CNN discriminator (Flax Linen)
"""
from typing import Any, Callable, Optional, Sequence

import jax.numpy as jnp
from flax import linen as nn

from rfsf.common.errors import DimensionError
from .blocks_linen import ChannelAttention
from .layers import conv1d, get_like_padding, linear

Dtype = Any


def conv_out_len(length, kernel_size, stride=2):
    pad = get_like_padding(kernel_size, stride)
    return (length + 2 * pad - kernel_size) // stride + 1


class Discriminator(nn.Module):
    """ conv stack (stride 2, ReLU) -> channel attention -> global average pool -> source / class heads

    A bag [B, t, instance_dim] is read as a one channel signal of length t * instance_dim.
    Returns (source logit [B], class logits [B, K]). With bag_size and instance_dim set, any other
    input length raises DimensionError naming the first conv layer.
    """
    num_classes: int
    channels: Sequence[int] = (16, 32, 64, 128, 128)
    kernel_size: int = 3
    channel_attention: str = 'learned'
    act_fn: Callable = nn.relu
    bag_size: Optional[int] = None
    instance_dim: Optional[int] = None
    dtype: Dtype = jnp.float64

    @nn.compact
    def __call__(self, bags):
        x = bags.reshape(bags.shape[0], -1, 1)
        if self.bag_size is not None and self.instance_dim is not None:
            expected = self.bag_size * self.instance_dim
            if x.shape[1] != expected:
                raise DimensionError(
                    f'conv0: input length {x.shape[1]} does not match t * instance_dim = '
                    f'{self.bag_size} * {self.instance_dim} = {expected}')
        for i, c in enumerate(self.channels):
            x = conv1d(c, self.kernel_size, stride=2, padding='LIKE', dtype=self.dtype, name=f'conv{i}')(x)
            x = self.act_fn(x)
        w, x = ChannelAttention(self.channel_attention, dtype=self.dtype, name='channel_attn')(x)
        self.sow('intermediates', 'channel_weights', w)
        x = x.mean(axis=-2)
        source = linear(1, dtype=self.dtype, name='source_head')(x)[..., 0]
        logits = linear(self.num_classes, dtype=self.dtype, name='class_head')(x)
        return source, logits
