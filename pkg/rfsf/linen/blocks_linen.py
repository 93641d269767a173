""" Transformer, MIL pooling and channel attention blocks for Flax Linen
"""
from typing import Any, Callable

import flax
import jax
import jax.numpy as jnp
import numpy as np
from flax import linen as nn

from rfsf.common.errors import ContractError
from rfsf.common.tensor_core import softmax_stable
from .layers import MultiHeadSelfAttention, linear, layernorm

Dtype = Any


def positional_encoding(t, d):
    """PE[j, 2i] = sin(j / 10000^(2i/d)), PE[j, 2i + 1] = cos(j / 10000^(2i/d))"""
    if t < 1 or d < 1 or d % 2:
        raise ContractError(f'positional encoding needs t, d >= 1 and even d, got t={t}, d={d}')
    pos = np.arange(t, dtype=np.float64)[:, None]
    div = np.power(10000., np.arange(0, d, 2, dtype=np.float64) / d)
    pe = np.zeros((t, d), dtype=np.float64)
    pe[:, 0::2] = np.sin(pos / div)
    pe[:, 1::2] = np.cos(pos / div)
    return pe


class TransformerBlock(nn.Module):
    """ Post-norm encoder block, x = LN(x + MHSA(x)); x = LN(x + FF(x)) """
    num_heads: int = 8
    ff_features: int = 256
    act_fn: Callable = nn.relu
    dtype: Dtype = jnp.float64

    @nn.compact
    def __call__(self, x):
        d = x.shape[-1]
        x = layernorm(self.dtype, name='norm1')(
            x + MultiHeadSelfAttention(self.num_heads, dtype=self.dtype, name='attn')(x))
        y = linear(self.ff_features, dtype=self.dtype, name='ff1')(x)
        y = self.act_fn(y)
        y = linear(d, dtype=self.dtype, name='ff2')(y)
        return layernorm(self.dtype, name='norm2')(x + y)


@flax.struct.dataclass
class MILOutput:
    attention: jnp.ndarray  # a, [B, t]
    instance_probs: jnp.ndarray  # y_hat_j, [B, t, K]
    bag_probs: jnp.ndarray  # Y_hat, [B, K]
    saliency: jnp.ndarray  # a_j * y_hat_j, [B, t, K]


def conjunctive_pool(attention, instance_probs):
    """ Y_hat = (1/t) sum_j a_j * y_hat_j """
    saliency = attention[..., None] * instance_probs
    bag_probs = saliency.mean(axis=-2)
    return MILOutput(attention=attention, instance_probs=instance_probs, bag_probs=bag_probs, saliency=saliency)


class MILConjunctivePool(nn.Module):
    """ a_j = sigmoid(psi_attn(z_j)), y_hat_j = softmax(psi_clf(z_j)) """
    num_classes: int
    dtype: Dtype = jnp.float64

    @nn.compact
    def __call__(self, z):
        a = jax.nn.sigmoid(linear(1, dtype=self.dtype, name='attention')(z))[..., 0]
        y = softmax_stable(linear(self.num_classes, dtype=self.dtype, name='classifier')(z), axis=-1)
        return conjunctive_pool(a, y)


class MeanPoolHead(nn.Module):
    """ Instance-mean pooling and a softmax classifier, the no-MIL ablation head

    Reported as a MILOutput with unit attention and every instance carrying the bag prediction.
    """
    num_classes: int
    dtype: Dtype = jnp.float64

    @nn.compact
    def __call__(self, z):
        probs = softmax_stable(linear(self.num_classes, dtype=self.dtype, name='classifier')(z.mean(axis=-2)), axis=-1)
        t = z.shape[-2]
        instance_probs = jnp.broadcast_to(probs[..., None, :], probs.shape[:-1] + (t, probs.shape[-1]))
        return conjunctive_pool(jnp.ones(z.shape[:-1], dtype=z.dtype), instance_probs)


class ChannelAttention(nn.Module):
    """ Channel reweighting from pooled statistics

    w = softmax(Dense([avg_pool(F), max_pool(F)])), F'[c] = C * w[c] * F[c]

    mode 'uniform' fixes w = 1/C (so F' == F), 'none' skips the module.
    Input is [B, L, C], returns (weights [B, C], F').
    """
    mode: str = 'learned'
    dtype: Dtype = jnp.float64

    @nn.compact
    def __call__(self, x):
        c = x.shape[-1]
        if self.mode == 'learned':
            s = jnp.concatenate([x.mean(axis=-2), x.max(axis=-2)], axis=-1)
            w = softmax_stable(linear(c, dtype=self.dtype, name='fc')(s), axis=-1)
        else:
            w = jnp.full(x.shape[:-2] + (c,), 1. / c, dtype=x.dtype)
        if self.mode == 'none':
            return w, x
        return w, x * (c * w)[..., None, :]
