""" Optax Adam with epsilon on the uncorrected second moment

This is the "efficient" ordering of the original Adam algorithm: the bias corrections
are folded into the step size and eps is added to sqrt(v) before correction, so a
single step of p=1, g=1, lr=0.1 lands on 0.9000000316 rather than 0.900000001.
"""
from typing import NamedTuple

import jax
import jax.numpy as jnp
import optax

from .helpers import ScalarOrSchedule, scale_by_learning_rate, update_moment


class AdamState(NamedTuple):
    count: jnp.ndarray  # step_count
    mu: optax.Updates  # m
    nu: optax.Updates  # v


def scale_by_adam_hat(
        b1: float = 0.9,
        b2: float = 0.999,
        eps: float = 1e-8) -> optax.GradientTransformation:
    """Rescales updates by the Adam moment estimates.

    Args:
        b1: decay rate of the first moment.
        b2: decay rate of the second moment.
        eps: added to the square root of the uncorrected second moment.

    Returns:
        An (init_fn, update_fn) tuple.
    """

    def init_fn(params: optax.Params) -> AdamState:
        mu = jax.tree_util.tree_map(jnp.zeros_like, params)
        nu = jax.tree_util.tree_map(jnp.zeros_like, params)
        return AdamState(count=jnp.zeros([], jnp.int32), mu=mu, nu=nu)

    def update_fn(updates: optax.Updates, state: AdamState, params=None):
        del params
        mu = update_moment(updates, state.mu, b1, 1)
        nu = update_moment(updates, state.nu, b2, 2)
        count = state.count + 1
        c = count.astype(jnp.float64)
        step_scale = jnp.sqrt(1. - b2 ** c) / (1. - b1 ** c)
        updates = jax.tree_util.tree_map(lambda m, v: step_scale * m / (jnp.sqrt(v) + eps), mu, nu)
        return updates, AdamState(count=count, mu=mu, nu=nu)

    return optax.GradientTransformation(init_fn, update_fn)


def adam_hat(
        learning_rate: ScalarOrSchedule,
        b1: float = 0.9,
        b2: float = 0.999,
        eps: float = 1e-8) -> optax.GradientTransformation:
    return optax.chain(
        scale_by_adam_hat(b1=b1, b2=b2, eps=eps),
        scale_by_learning_rate(learning_rate),
    )
