""" Differentiable primitives, backward and gradient checking

Arrays are 64-bit jax arrays and parameters are Flax pytrees; reverse-mode
differentiation is jax.grad over a trace rebuilt on every call. The functions here
are the named primitives the models are composed of, each of which must pass
grad_check.
"""
import functools
import logging

import jax
import jax.numpy as jnp
import numpy as np
from jax import lax
from jax.flatten_util import ravel_pytree

from .errors import ContractError, DimensionError
from .loss import cross_entropy, bce_with_logits, bag_nll
from .optim import AdamState, scale_by_adam_hat, tree_all_finite

__all__ = [
    'matmul', 'add', 'mul', 'relu', 'sigmoid', 'tanh', 'layer_norm', 'conv1d', 'reduce_mean', 'reduce_max',
    'concat', 'embedding', 'softmax_stable', 'log_softmax', 'cross_entropy', 'bce_with_logits', 'bag_nll',
    'backward', 'zero_grad', 'accumulate_grads', 'grad_check', 'init_adam_state', 'adam_step', 'AdamState']

_logger = logging.getLogger(__name__)


def matmul(a, b):
    a, b = jnp.asarray(a), jnp.asarray(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f'matmul shape mismatch: {a.shape} x {b.shape}')
    return jnp.matmul(a, b)


def add(a, b):
    return jnp.add(a, b)


def mul(a, b):
    return jnp.multiply(a, b)


relu = jax.nn.relu
sigmoid = jax.nn.sigmoid
tanh = jnp.tanh


def layer_norm(x, scale=None, bias=None, axis=-1, eps=1e-5):
    mean = x.mean(axis=axis, keepdims=True)
    var = jnp.square(x - mean).mean(axis=axis, keepdims=True)
    y = (x - mean) * lax.rsqrt(var + eps)
    if scale is not None:
        y = y * scale
    if bias is not None:
        y = y + bias
    return y


def conv1d(x, kernel, stride=1, padding=0):
    """1-D convolution.

    Args:
        x: [batch, length, in_channels]
        kernel: [kernel_size, in_channels, out_channels]
        padding: symmetric int padding or 'SAME' / 'VALID'
    """
    if x.shape[-1] != kernel.shape[1]:
        raise DimensionError(f'conv1d channel mismatch: input {x.shape}, kernel {kernel.shape}')
    if isinstance(padding, int):
        padding = [(padding, padding)]
    return lax.conv_general_dilated(
        x, kernel, (stride,), padding, dimension_numbers=('NWC', 'WIO', 'NWC'))


def reduce_mean(x, axis=-1, keepdims=False):
    return jnp.mean(x, axis=axis, keepdims=keepdims)


def reduce_max(x, axis=-1, keepdims=False):
    return jnp.max(x, axis=axis, keepdims=keepdims)


def concat(xs, axis=-1):
    return jnp.concatenate(xs, axis=axis)


def embedding(table, ids):
    return jnp.take(table, ids, axis=0)


def _check_axis(x, axis):
    if not -x.ndim <= axis < x.ndim:
        raise ContractError(f'axis {axis} out of range for rank {x.ndim}')


def softmax_stable(x, axis=-1):
    """exp(x - max) / sum(exp(x - max)) along axis."""
    x = jnp.asarray(x)
    _check_axis(x, axis)
    return jax.nn.softmax(x, axis=axis)


def log_softmax(x, axis=-1):
    x = jnp.asarray(x)
    _check_axis(x, axis)
    return jax.nn.log_softmax(x, axis=axis)


def backward(loss_fn, params, *args, has_aux=False, **kwargs):
    """Evaluate loss_fn(params, *args) and the gradient w.r.t. params.

    Returns:
        (loss, grads) or ((loss, aux), grads) when has_aux.
    """

    def _scalar_fn(p, *a, **kw):
        out = loss_fn(p, *a, **kw)
        loss = out[0] if has_aux else out
        if jnp.shape(loss) != ():
            raise ContractError(f'backward needs a scalar loss, got shape {jnp.shape(loss)}')
        return out

    return jax.value_and_grad(_scalar_fn, has_aux=has_aux)(params, *args, **kwargs)


def zero_grad(params):
    return jax.tree_util.tree_map(jnp.zeros_like, params)


def accumulate_grads(acc, grads):
    return jax.tree_util.tree_map(jnp.add, acc, grads)


def grad_check(f, x, h=1e-6):
    """Max relative error between jax.grad and central differences.

    error = max_i |analytic_i - numeric_i| / max(1, |analytic_i|)

    Args:
        f: scalar valued function of x.
        x: array or pytree of arrays.
        h: finite difference step in [1e-7, 1e-4].
    """
    if not 1e-7 <= h <= 1e-4:
        raise ContractError(f'grad_check step h={h} outside [1e-7, 1e-4]')
    flat, unravel = ravel_pytree(x)
    flat = jnp.asarray(flat, jnp.float64)
    fn = jax.jit(lambda v: f(unravel(v)))
    analytic = np.asarray(jax.grad(fn)(flat))
    numeric = np.empty_like(analytic)
    basis = np.zeros(flat.shape, np.float64)
    for i in range(flat.size):
        basis[i] = h
        numeric[i] = (float(fn(flat + basis)) - float(fn(flat - basis))) / (2 * h)
        basis[i] = 0.
    if not flat.size:
        return 0.
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1., np.abs(analytic))))


def init_adam_state(params) -> AdamState:
    return scale_by_adam_hat().init(params)


def adam_step(params, grads, state: AdamState, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update. Non-finite grads leave params and state untouched.

    Returns:
        (new_params, new_state, is_finite)
    """
    if lr <= 0:
        raise ContractError(f'learning rate must be > 0, got {lr}')
    if jax.tree_util.tree_structure(params) != jax.tree_util.tree_structure(grads):
        raise DimensionError('params and grads have different structure')
    is_fin = tree_all_finite(grads)
    updates, new_state = scale_by_adam_hat(beta1, beta2, eps).update(grads, state)
    new_params = jax.tree_util.tree_map(lambda p, u: p - lr * u, params, updates)
    new_params = jax.tree_util.tree_map(functools.partial(jnp.where, is_fin), new_params, params)
    new_state = jax.tree_util.tree_map(functools.partial(jnp.where, is_fin), new_state, state)
    if not isinstance(is_fin, jax.core.Tracer) and not bool(is_fin):
        _logger.warning('adam_step rejected a non-finite gradient, params left unchanged')
    return new_params, new_state, is_fin
