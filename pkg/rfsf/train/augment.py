""" Dataset augmentation with a trained generator
"""
import logging

import jax
import numpy as np
from jax import random

from rfsf.common.errors import ContractError
from rfsf.data.bags import BagSet
from .cgan import sample_conditioning

_logger = logging.getLogger(__name__)


def allocate_counts(class_counts, total):
    """Split total across classes proportionally to class_counts by largest remainder."""
    class_counts = np.asarray(class_counts, dtype=np.int64)
    if total == 0 or class_counts.sum() == 0:
        return np.zeros_like(class_counts)
    quota = class_counts * total / class_counts.sum()
    counts = np.floor(quota).astype(np.int64)
    # stable sort keeps the lower class index first on equal remainders
    order = np.argsort(-(quota - counts), kind='stable')
    counts[order[:total - counts.sum()]] += 1
    return counts


def augment_dataset(real: BagSet, gen, gen_params, ratio, seed=0, batch_size=256):
    """ Append round(ratio * |real|) generated bags whose label histogram follows the real one

    Generated bags are flagged synthetic; ratio 0 returns the input unchanged.
    """
    if ratio < 0:
        raise ContractError(f'augmentation ratio must be >= 0, got {ratio}')
    n_new = int(np.floor(ratio * len(real) + 0.5))
    if n_new == 0:
        return real
    counts = allocate_counts(real.class_counts(), n_new)
    labels = np.repeat(np.arange(real.num_classes), counts)
    labels = labels[np.random.default_rng(seed).permutation(n_new)]

    apply_fn = jax.jit(lambda p, z, y: gen.apply({'params': p}, z, y)[0])
    rng = random.PRNGKey(seed)
    noise_dim = gen.noise_dim
    out = []
    for i in range(0, n_new, batch_size):
        rng, step_rng = random.split(rng)
        y = labels[i:i + batch_size]
        z, _ = sample_conditioning(step_rng, len(y), noise_dim, real.num_classes)
        out.append(np.asarray(apply_fn(gen_params, z, y)))
    fake = BagSet(
        instances=np.concatenate(out), labels=labels, num_classes=real.num_classes,
        synthetic=np.ones(n_new, dtype=bool), sources=[f'synthetic@{i}' for i in range(n_new)],
        class_names=real.class_names)
    _logger.info(f'Augmented {len(real)} real bags with {n_new} generated bags')
    return real.concat(fake)
