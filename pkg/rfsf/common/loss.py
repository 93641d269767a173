import jax
import numpy as np
from jax import numpy as jnp

from .errors import ContractError


def _check_labels(labels, num_classes):
    # only concrete labels can be range checked, traced ones are trusted
    if isinstance(labels, jax.core.Tracer):
        return
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise IndexError(f'label out of range [0, {num_classes}): min {labels.min()}, max {labels.max()}')


def cross_entropy(logits, labels):
    """Mean negative log-likelihood of integer labels under softmax(logits).

    Args:
        logits: [batch, num_classes] float array.
        labels: [batch] int array of class indices.
    """
    if logits.ndim != labels.ndim + 1:
        raise ContractError(f'Incorrect shapes. Got shape {logits.shape} logits and {labels.shape} targets')
    num_classes = logits.shape[-1]
    _check_labels(labels, num_classes)
    logp = jax.nn.log_softmax(logits, axis=-1)  # log-sum-exp
    nll = -jnp.take_along_axis(logp, labels[..., None], axis=-1)[..., 0]
    return nll.mean()


def bce_with_logits(logits, targets):
    """Mean binary cross entropy of {0, 1} targets against logits (log-sigmoid form)."""
    targets = jnp.asarray(targets, logits.dtype)
    loss = -(targets * jax.nn.log_sigmoid(logits) + (1. - targets) * jax.nn.log_sigmoid(-logits))
    return loss.mean()


def bag_nll(bag_probs, labels, eps=1e-12):
    """Cross entropy on already aggregated bag probabilities.

    Conjunctive MIL outputs are not renormalized, so the label column is read directly.
    """
    _check_labels(labels, bag_probs.shape[-1])
    p = jnp.take_along_axis(bag_probs, labels[..., None], axis=-1)[..., 0]
    return -jnp.log(p + eps).mean()
