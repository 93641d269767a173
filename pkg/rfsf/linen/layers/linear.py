""" Linear / Conv1d Layer Wrappers

All params default to float64 and Xavier uniform kernels with zero bias.
"""

from typing import Any, Callable, Optional, Union

import flax.linen as nn
import flax.linen.initializers as initializers
import jax.numpy as jnp

PRNGKey = Any
Shape = Any
Dtype = Any
Array = Any

default_kernel_init = initializers.xavier_uniform()


# calculate SAME-like symmetric padding for a convolution
def get_like_padding(kernel_size: int, stride: int = 1, dilation: int = 1, **_) -> int:
    padding = ((stride - 1) + dilation * (kernel_size - 1)) // 2
    return padding


def conv1d(
        features: int,
        kernel_size: int,
        stride: Optional[int] = None,
        padding: Union[str, int] = 0,
        dilation: Optional[int] = None,
        bias: bool = True,
        dtype: Dtype = jnp.float64,
        name: Optional[str] = None,
        kernel_init: Callable[[PRNGKey, Shape, Dtype], Array] = default_kernel_init,
        bias_init: Callable[[PRNGKey, Shape, Dtype], Array] = initializers.zeros):

    stride = stride or 1
    dilation = dilation or 1
    if isinstance(padding, str):
        if padding == 'LIKE':
            padding = get_like_padding(kernel_size, stride, dilation)
            padding = [(padding, padding)]
    else:
        padding = [(padding, padding)]
    return nn.Conv(
        features=features,
        kernel_size=(kernel_size,),
        strides=(stride,),
        padding=padding,
        kernel_dilation=(dilation,),
        use_bias=bias,
        dtype=dtype,
        param_dtype=dtype,
        name=name,
        kernel_init=kernel_init,
        bias_init=bias_init,
    )


def conv_transpose1d(
        features: int,
        kernel_size: int,
        stride: int = 2,
        bias: bool = True,
        dtype: Dtype = jnp.float64,
        name: Optional[str] = None,
        kernel_init: Callable[[PRNGKey, Shape, Dtype], Array] = default_kernel_init,
        bias_init: Callable[[PRNGKey, Shape, Dtype], Array] = initializers.zeros):
    # 'SAME' gives length * stride
    return nn.ConvTranspose(
        features=features,
        kernel_size=(kernel_size,),
        strides=(stride,),
        padding='SAME',
        use_bias=bias,
        dtype=dtype,
        param_dtype=dtype,
        name=name,
        kernel_init=kernel_init,
        bias_init=bias_init,
    )


def linear(
    features: int,
    bias: bool = True,
    dtype: Dtype = jnp.float64,
    name: str = None,
    kernel_init: Callable[[PRNGKey, Shape, Dtype], Array] = default_kernel_init,
    bias_init: Callable[[PRNGKey, Shape, Dtype], Array] = initializers.zeros,
):
    return nn.Dense(
        features=features,
        use_bias=bias,
        dtype=dtype,
        param_dtype=dtype,
        name=name,
        kernel_init=kernel_init,
        bias_init=bias_init,
    )


def layernorm(dtype: Dtype = jnp.float64, name: str = None, epsilon: float = 1e-5):
    return nn.LayerNorm(epsilon=epsilon, dtype=dtype, param_dtype=dtype, name=name)


def embed(num_embeddings: int, features: int, dtype: Dtype = jnp.float64, name: str = None):
    return nn.Embed(
        num_embeddings=num_embeddings,
        features=features,
        dtype=dtype,
        param_dtype=dtype,
        embedding_init=default_kernel_init,
        name=name,
    )
