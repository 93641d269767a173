""" Feed-forward activations

Names match `ModelConfig.ff_act`. relu and tanh are the tensor_core primitives.
"""
from flax import linen as nn

from rfsf.common.errors import ConfigError
from rfsf.common.tensor_core import relu, tanh

_ACT_FN = dict(
    relu=relu,
    gelu=nn.gelu,
    tanh=tanh,
)


def get_act_fn(name='relu'):
    act_fn = _ACT_FN.get(name.lower())
    if act_fn is None:
        raise ConfigError(f'Unknown activation {name}, expected one of {tuple(_ACT_FN)}')
    return act_fn
