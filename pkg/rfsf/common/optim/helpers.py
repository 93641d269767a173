import functools
from typing import Callable, Union

import jax
import optax
from jax import numpy as jnp

ScalarOrSchedule = Union[float, Callable]


def scale_by_learning_rate(learning_rate: ScalarOrSchedule):
    if callable(learning_rate):
        return optax.scale_by_schedule(lambda count: -learning_rate(count))
    return optax.scale(-learning_rate)


def update_moment(updates, moments, decay, order):
    return jax.tree_util.tree_map(lambda g, t: (1 - decay) * (g ** order) + decay * t, updates, moments)


def tree_all_finite(tree):
    leaves = jax.tree_util.tree_leaves(tree)
    if not leaves:
        return jnp.asarray(True)
    return jnp.all(jnp.stack([jnp.all(jnp.isfinite(x)) for x in leaves]))


def finite_update(tx: optax.GradientTransformation, grads, opt_state, params):
    """Apply one optimizer update, keeping params and state unchanged if any grad is non-finite.

    Returns:
        (new_params, new_opt_state, is_finite)
    """
    is_fin = tree_all_finite(grads)
    updates, new_opt_state = tx.update(grads, opt_state, params)
    new_params = optax.apply_updates(params, updates)
    # if is_fin == False the gradients contain Inf/NaNs and the old params / optimizer state are restored
    new_params = jax.tree_util.tree_map(functools.partial(jnp.where, is_fin), new_params, params)
    new_opt_state = jax.tree_util.tree_map(functools.partial(jnp.where, is_fin), new_opt_state, opt_state)
    return new_params, new_opt_state, is_fin
