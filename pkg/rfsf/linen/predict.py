""" Batched inference helpers shared by training and evaluation
"""
import jax
import jax.numpy as jnp
import numpy as np


def make_disc_apply(disc):
    return jax.jit(lambda params, bags: disc.apply({'params': params}, bags))


def make_classify_apply(gen):
    return jax.jit(lambda params, bags: gen.apply({'params': params}, bags, method=type(gen).classify))


def batched_apply(apply_fn, params, bags, batch_size=256):
    """apply_fn over bags in chunks of batch_size, outputs concatenated as numpy."""
    if not bags.shape[0]:
        # output structure from one zero bag, cut to length 0
        out = jax.device_get(apply_fn(params, jnp.zeros((1,) + tuple(bags.shape[1:]))))
        return jax.tree_util.tree_map(lambda x: x[:0], out)
    outs = []
    for i in range(0, bags.shape[0], batch_size):
        outs.append(jax.device_get(apply_fn(params, jnp.asarray(bags[i:i + batch_size]))))
    return jax.tree_util.tree_map(lambda *x: np.concatenate(x), *outs)


def predict_disc(apply_fn, params, bags, batch_size=256):
    """Class predictions of the discriminator class head."""
    _, logits = batched_apply(apply_fn, params, bags, batch_size)
    return np.argmax(logits, axis=-1)


def predict_mil(apply_fn, params, bags, batch_size=256):
    """Class predictions of the generator MIL head (argmax of the bag prediction)."""
    mil = batched_apply(apply_fn, params, bags, batch_size)
    return np.argmax(mil.bag_probs, axis=-1)
