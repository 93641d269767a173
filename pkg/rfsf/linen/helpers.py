""" Model factory, parameter counting and an instrumented MAC counter
"""
import collections
import logging
import math
import os

import jax
import jax.numpy as jnp
from flax import linen as nn

from rfsf.common.config import ff_features, model_config_from_dict
from rfsf.common.io import save_checkpoint, load_checkpoint
from .blocks_linen import MILConjunctivePool, MeanPoolHead
from .discriminator_linen import Discriminator
from .generator_linen import TransformerMILGenerator, CnnGenerator
from .layers import MultiHeadSelfAttention, get_act_fn

_logger = logging.getLogger(__name__)


def transformer_generator_param_count(config):
    t, d, k, z, inst = config.bag_size, config.d_model, config.num_classes, config.noise_dim, config.instance_dim
    dff = ff_features(config)
    block = 4 * (d * d + d) + (d * dff + dff) + (dff * d + d) + 2 * 2 * d
    pool = (d + 1) + (d * k + k) if config.use_mil else (d * k + k)
    return (
        z * t * d + t * d  # noise projection
        + k * d  # label embedding
        + inst * d + d  # input projection
        + config.n_layers * block
        + pool
        + d * inst + inst)  # output projection


def cnn_generator_param_count(config, base_channels):
    z, k = config.noise_dim, config.num_classes
    channels = tuple(config.cnn_gen_channels)
    base_len = config.bag_size * config.instance_dim // 2 ** len(channels)
    count = k * z + 2 * z * base_len * base_channels + base_len * base_channels
    c_in = base_channels
    for c in channels:
        count += c_in * c * config.kernel_size + c
        c_in = c
    return count + c_in * config.kernel_size + 1


def match_cnn_base_channels(config, max_channels=1024):
    """Base width whose CNN generator param count is closest to the Transformer generator's."""
    target = transformer_generator_param_count(config)
    best = min(range(1, max_channels + 1), key=lambda c: abs(cnn_generator_param_count(config, c) - target))
    return best


def generator_param_count(config):
    if config.generator_type == 'cnn':
        return cnn_generator_param_count(config, config.cnn_gen_base_channels or match_cnn_base_channels(config))
    return transformer_generator_param_count(config)


def discriminator_param_count(config):
    count = 0
    c_in = 1
    for c in config.disc_channels:
        count += c_in * c * config.kernel_size + c
        c_in = c
    if config.channel_attention == 'learned':
        count += 2 * c_in * c_in + c_in
    return count + (c_in + 1) + (c_in * config.num_classes + config.num_classes)


def param_count(params):
    return sum(x.size for x in jax.tree_util.tree_leaves(params))


def create_generator(config, dtype=jnp.float64):
    act_fn = get_act_fn(config.ff_act)
    if config.generator_type == 'cnn':
        base = config.cnn_gen_base_channels or match_cnn_base_channels(config)
        return CnnGenerator(
            num_classes=config.num_classes, bag_size=config.bag_size, instance_dim=config.instance_dim,
            noise_dim=config.noise_dim, base_channels=base, channels=tuple(config.cnn_gen_channels),
            kernel_size=config.kernel_size, act_fn=act_fn, dtype=dtype)
    return TransformerMILGenerator(
        num_classes=config.num_classes, bag_size=config.bag_size, instance_dim=config.instance_dim,
        d_model=config.d_model, n_layers=config.n_layers, n_heads=config.n_heads, ff_features=ff_features(config),
        noise_dim=config.noise_dim, use_mil=config.use_mil, use_pos_enc=config.use_pos_enc, act_fn=act_fn,
        dtype=dtype)


def create_discriminator(config, dtype=jnp.float64):
    return Discriminator(
        num_classes=config.num_classes, channels=tuple(config.disc_channels), kernel_size=config.kernel_size,
        channel_attention=config.channel_attention, bag_size=config.bag_size, instance_dim=config.instance_dim,
        dtype=dtype)


def dummy_inputs(config, batch_size=1, dtype=jnp.float64):
    z = jnp.zeros((batch_size, config.noise_dim), dtype=dtype)
    labels = jnp.zeros((batch_size,), dtype=jnp.int32)
    bags = jnp.zeros((batch_size, config.bag_size, config.instance_dim), dtype=dtype)
    return z, labels, bags


def init_generator(model, config, rng):
    z, labels, bags = dummy_inputs(config)
    return model.init(rng, z, labels, bags, method=type(model).init_all)['params']


def init_discriminator(model, config, rng):
    return model.init(rng, dummy_inputs(config)[2])['params']


def create_model(config, rng=None, dtype=jnp.float64):
    """ Build and initialize the generator / discriminator pair for a ModelConfig

    Returns:
        (generator, discriminator, generator params, discriminator params)
    """
    rng = jax.random.PRNGKey(0) if rng is None else rng
    gen_rng, disc_rng = jax.random.split(rng)
    gen = create_generator(config, dtype=dtype)
    disc = create_discriminator(config, dtype=dtype)
    gen_params = init_generator(gen, config, gen_rng)
    disc_params = init_discriminator(disc, config, disc_rng)
    _logger.info(
        f'Created {config.generator_type} generator ({param_count(gen_params)} params) and '
        f'discriminator ({param_count(disc_params)} params)')
    return gen, disc, gen_params, disc_params


def _module_macs(module, args, out):
    if isinstance(module, nn.Dense):
        x = args[0]
        return math.prod(x.shape[:-1]) * x.shape[-1] * module.features
    if isinstance(module, nn.ConvTranspose):
        x = args[0]
        return math.prod(x.shape[:-1]) * x.shape[-1] * module.features * math.prod(module.kernel_size)
    if isinstance(module, nn.Conv):
        x = args[0]
        return math.prod(out.shape[:-1]) * x.shape[-1] * module.features * math.prod(module.kernel_size)
    if isinstance(module, MultiHeadSelfAttention):
        *batch, t, d = args[0].shape
        return 2 * math.prod(batch) * t * t * d  # scores + weighted values
    if isinstance(module, (MILConjunctivePool, MeanPoolHead)):
        *batch, t, _ = args[0].shape
        return math.prod(batch) * t * module.num_classes  # a_j * y_hat_j accumulation
    return 0


class MacCounter:
    """ Counts multiply-accumulates of every intercepted module call in a forward pass

    Adds, activations, norms, embeddings and elementwise rescales count as zero.
    """

    def __init__(self):
        self.total = 0
        self.by_type = collections.Counter()

    def __call__(self, next_fun, args, kwargs, context):
        out = next_fun(*args, **kwargs)
        if context.method_name == '__call__':
            macs = _module_macs(context.module, args, out)
            if macs:
                self.total += macs
                self.by_type[type(context.module).__name__] += macs
        return out


def count_macs(model, params, *args, method=None):
    """Run one forward pass under a MacCounter, returns the counter."""
    counter = MacCounter()
    with nn.intercept_methods(counter):
        model.apply({'params': params}, *args, method=method)
    return counter


GENERATOR_CKPT = 'generator.ckpt'
DISCRIMINATOR_CKPT = 'discriminator.ckpt'


def save_models(outdir, config, gen_params, disc_params):
    save_checkpoint(os.path.join(outdir, GENERATOR_CKPT), 'generator', config.to_dict(), gen_params)
    save_checkpoint(os.path.join(outdir, DISCRIMINATOR_CKPT), 'discriminator', config.to_dict(), disc_params)


def load_model(filename, kind):
    """ Rebuild a model from a checkpoint file

    Returns:
        (model, params, ModelConfig)
    """
    _, config, params = load_checkpoint(filename, kind=kind)
    config = model_config_from_dict(config)
    model = create_generator(config) if kind == 'generator' else create_discriminator(config)
    params = jax.tree_util.tree_map(jnp.asarray, params)
    return model, params, config


def load_models(ckpt_dir):
    """ (generator, generator params, discriminator, discriminator params, ModelConfig) from a run directory """
    gen, gen_params, config = load_model(os.path.join(ckpt_dir, GENERATOR_CKPT), 'generator')
    disc, disc_params, _ = load_model(os.path.join(ckpt_dir, DISCRIMINATOR_CKPT), 'discriminator')
    return gen, gen_params, disc, disc_params, config
