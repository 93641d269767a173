""" Per-instance explanations from the MIL head
"""
import dataclasses

import jax
import jax.numpy as jnp
import numpy as np

from rfsf.common.errors import ConfigError


@dataclasses.dataclass
class Explanation:
    attention: np.ndarray  # [t]
    instance_probs: np.ndarray  # [t, K]
    saliency: np.ndarray  # [t, K], a_j * y_hat_j
    bag_probs: np.ndarray  # [K]
    predicted: int
    top_instance: int  # instance with the largest saliency for the predicted class


def explain_bags(bags, gen, gen_params):
    """Explanations for a batch of bags [B, t, instance_dim]."""
    if not hasattr(gen, 'classify'):
        raise ConfigError('explanations need a transformer generator with a MIL head')
    mil = gen.apply({'params': gen_params}, jnp.asarray(bags), method=type(gen).classify)
    mil = jax.tree_util.tree_map(np.asarray, mil)
    out = []
    for i in range(bags.shape[0]):
        predicted = int(np.argmax(mil.bag_probs[i]))
        out.append(Explanation(
            attention=mil.attention[i],
            instance_probs=mil.instance_probs[i],
            saliency=mil.saliency[i],
            bag_probs=mil.bag_probs[i],
            predicted=predicted,
            top_instance=int(np.argmax(mil.saliency[i, :, predicted]))))
    return out


def explain(bag, gen, gen_params) -> Explanation:
    """Saliency map a_j * y_hat_j of one bag [t, instance_dim] and its most salient instance."""
    return explain_bags(np.asarray(bag)[None], gen, gen_params)[0]
