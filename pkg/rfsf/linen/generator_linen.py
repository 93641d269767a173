""" Transformer-MIL and transposed-conv generators (Flax Linen)

The Transformer generator has two entry points sharing the encoder blocks and the
MIL heads:
  * __call__(z, labels): noise and class label -> synthetic bag + MILOutput
  * classify(bags): real bags -> MILOutput, the 'mil' classifier head
"""
from typing import Any, Callable, Sequence

import jax.numpy as jnp
from flax import linen as nn

from rfsf.common.errors import ConfigError
from .blocks_linen import TransformerBlock, MILConjunctivePool, MeanPoolHead, positional_encoding
from .layers import linear, embed, conv1d, conv_transpose1d

Dtype = Any


class TransformerMILGenerator(nn.Module):
    num_classes: int
    bag_size: int = 10
    instance_dim: int = 256
    d_model: int = 64
    n_layers: int = 4
    n_heads: int = 8
    ff_features: int = 256
    noise_dim: int = 32
    use_mil: bool = True
    use_pos_enc: bool = True
    act_fn: Callable = nn.relu
    dtype: Dtype = jnp.float64

    def setup(self):
        t, d = self.bag_size, self.d_model
        self.noise_proj = linear(t * d, dtype=self.dtype)
        self.label_embed = embed(self.num_classes, d, dtype=self.dtype)
        self.input_proj = linear(d, dtype=self.dtype)
        self.blocks = [
            TransformerBlock(self.n_heads, self.ff_features, act_fn=self.act_fn, dtype=self.dtype)
            for _ in range(self.n_layers)]
        pool_layer = MILConjunctivePool if self.use_mil else MeanPoolHead
        self.pool = pool_layer(self.num_classes, dtype=self.dtype)
        self.out_proj = linear(self.instance_dim, dtype=self.dtype)

    def encode(self, h):
        if self.use_pos_enc:
            h = h + jnp.asarray(positional_encoding(h.shape[-2], h.shape[-1]), dtype=h.dtype)
        for block in self.blocks:
            h = block(h)
        return h

    def __call__(self, z, labels):
        """
        Args:
            z: [B, noise_dim] Gaussian noise
            labels: [B] conditioning class indices

        Returns:
            (bag [B, t, instance_dim], MILOutput)
        """
        h = self.noise_proj(z).reshape(z.shape[0], self.bag_size, self.d_model)
        h = h + self.label_embed(labels)[:, None, :]
        h = self.encode(h)
        return self.out_proj(h), self.pool(h)

    def classify(self, bags):
        """ bags [B, t, instance_dim] -> MILOutput """
        return self.pool(self.encode(self.input_proj(bags)))

    def init_all(self, z, labels, bags):
        return self(z, labels), self.classify(bags)


class CnnGenerator(nn.Module):
    """ Transposed-conv generator, no MIL head

    [z, embed(label)] -> Dense -> [L / 2^n, C0] -> n x ConvTranspose(stride 2) -> Conv(1) -> [t, instance_dim]
    """
    num_classes: int
    bag_size: int = 10
    instance_dim: int = 256
    noise_dim: int = 32
    base_channels: int = 24
    channels: Sequence[int] = (64, 32, 16, 8)
    kernel_size: int = 3
    act_fn: Callable = nn.relu
    dtype: Dtype = jnp.float64

    @nn.compact
    def __call__(self, z, labels):
        length = self.bag_size * self.instance_dim
        scale = 2 ** len(self.channels)
        if length % scale:
            raise ConfigError(f'bag length {length} is not divisible by the generator upsampling {scale}')
        base_len = length // scale
        label_embed = embed(self.num_classes, self.noise_dim, dtype=self.dtype, name='label_embed')
        x = jnp.concatenate([z, label_embed(labels)], -1)
        x = linear(base_len * self.base_channels, dtype=self.dtype, name='proj')(x)
        x = self.act_fn(x).reshape(z.shape[0], base_len, self.base_channels)
        for i, c in enumerate(self.channels):
            x = conv_transpose1d(c, self.kernel_size, dtype=self.dtype, name=f'up{i}')(x)
            x = self.act_fn(x)
        x = conv1d(1, self.kernel_size, padding='LIKE', dtype=self.dtype, name='out')(x)
        return x.reshape(z.shape[0], self.bag_size, self.instance_dim), None

    def init_all(self, z, labels, bags):
        return self(z, labels)
