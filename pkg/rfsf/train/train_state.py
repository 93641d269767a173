""" Optimizer state and batching shared by the training loops
"""
import dataclasses
from typing import Any, List

import flax
import ml_collections
import numpy as np
import optax
import pandas as pd

from rfsf.common.errors import ConfigError, NumericalError
from rfsf.common.optim import create_optax_optim, finite_update


# flax.struct.dataclass enables instances of this class to be passed into jax
# transformations like tree_map and jit.
@flax.struct.dataclass
class ModelState:
    params: Any
    opt_tx: optax.GradientTransformation = flax.struct.field(pytree_node=False)
    opt_state: optax.OptState

    def apply_gradients(self, grads):
        """One optimizer step; non-finite grads leave params and state as they were."""
        params, opt_state, is_fin = finite_update(self.opt_tx, grads, self.opt_state, self.params)
        return self.replace(params=params, opt_state=opt_state), is_fin


def config_to_opt_args(config: ml_collections.ConfigDict):
    opt_kwargs = dict(
        eps=config.get('opt_eps'),
        beta1=config.get('opt_beta1'),
        beta2=config.get('opt_beta2'))
    opt_kwargs = {k: v for k, v in opt_kwargs.items() if v is not None}
    return opt_kwargs


def create_model_state(config: ml_collections.ConfigDict, params, learning_rate):
    opt_tx = create_optax_optim(config.opt, learning_rate=learning_rate, **config_to_opt_args(config))
    return ModelState(params=params, opt_tx=opt_tx, opt_state=opt_tx.init(params))


def check_dataset(bag_set, model_config, train_config):
    """Preconditions shared by the training loops."""
    if len(bag_set) < train_config.batch_size:
        raise ConfigError(f'{len(bag_set)} bags is fewer than batch size {train_config.batch_size}')
    if bag_set.num_classes != model_config.num_classes:
        raise ConfigError(f'bags have {bag_set.num_classes} classes, model expects {model_config.num_classes}')
    empty = [i for i, c in enumerate(bag_set.class_counts()) if c == 0]
    if empty:
        raise ConfigError(f'empty class(es) {empty} in training bags')
    if (bag_set.bag_size, bag_set.instance_dim) != (model_config.bag_size, model_config.instance_dim):
        raise ConfigError(
            f'bags are {bag_set.bag_size}x{bag_set.instance_dim}, model expects '
            f'{model_config.bag_size}x{model_config.instance_dim}')


def epoch_batches(n, batch_size, seed, epoch):
    """Shuffled index batches for one epoch, short tail dropped."""
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n - batch_size + 1, batch_size)]


def check_finite(loss, is_fin, what, epoch, batch):
    if not np.isfinite(loss) or not bool(is_fin):
        raise NumericalError(f'non-finite {what} loss {loss}', epoch=epoch, batch=batch)


@dataclasses.dataclass
class History:
    columns: tuple
    records: List[dict] = dataclasses.field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def append(self, **record):
        self.records.append({k: record[k] for k in self.columns})

    def to_frame(self):
        return pd.DataFrame(self.records, columns=list(self.columns))

    def to_csv(self, filename, timing=True):
        df = self.to_frame()
        if not timing:
            df = df.drop(columns=['seconds'])
        df.to_csv(filename, index=False, float_format='%.10g')
