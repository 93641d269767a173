""" Auxiliary-classifier conditional GAN training

One discriminator step then one generator step per batch. Fake bags come from
z ~ N(0, I) and conditioning labels drawn uniformly over the classes.
"""
import functools
import logging
import time

import flax
import jax
import jax.numpy as jnp
import numpy as np
from jax import lax, random

from rfsf.common.loss import bce_with_logits, cross_entropy, bag_nll
from rfsf.common.metrics import AverageMeter, acc_top1
from rfsf.common.tensor_core import backward
from rfsf.linen import create_model, make_disc_apply, make_classify_apply, predict_disc, predict_mil
from .train_state import ModelState, History, create_model_state, check_dataset, epoch_batches, check_finite

_logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ('epoch', 'd_loss', 'g_loss', 'd_src_acc', 'd_cls_acc', 'g_mil_acc', 'seconds')


@flax.struct.dataclass
class GanState:
    step: int
    gen: ModelState
    disc: ModelState


def discriminator_loss(disc, disc_params, real_bags, real_labels, fake_bags, lambda_cls=1.):
    """ BCE(source; real=1, fake=0) over both halves + lambda_cls * CE(class logits of real, labels)

    Returns:
        (loss, (real source logits, real class logits, fake source logits))
    """
    real_src, real_cls = disc.apply({'params': disc_params}, real_bags)
    fake_src, _ = disc.apply({'params': disc_params}, fake_bags)
    src = jnp.concatenate([real_src, fake_src])
    targets = jnp.concatenate([jnp.ones_like(real_src), jnp.zeros_like(fake_src)])
    loss = bce_with_logits(src, targets) + lambda_cls * cross_entropy(real_cls, real_labels)
    return loss, (real_src, real_cls, fake_src)


def generator_loss(disc, disc_params, fake_bags, cond_labels, mil=None, lambda_cls=1., lambda_mil=.5):
    """ BCE(source of fake; target real) + lambda_cls * CE(class of fake) + lambda_mil * NLL(Y_hat)

    The MIL term is skipped for generators without a MIL head (mil is None).
    """
    fake_src, fake_cls = disc.apply({'params': disc_params}, fake_bags)
    loss = bce_with_logits(fake_src, jnp.ones_like(fake_src)) + lambda_cls * cross_entropy(fake_cls, cond_labels)
    if mil is not None:
        loss = loss + lambda_mil * bag_nll(mil.bag_probs, cond_labels)
    return loss, fake_cls


def sample_conditioning(rng, batch_size, noise_dim, num_classes):
    z_rng, label_rng = random.split(rng)
    z = random.normal(z_rng, (batch_size, noise_dim), dtype=jnp.float64)
    labels = random.randint(label_rng, (batch_size,), 0, num_classes)
    return z, labels


def disc_step(gen, disc, state: GanState, real_bags, real_labels, z, cond_labels, lambda_cls=1.):
    """Single discriminator update, generator params untouched."""
    fake_bags, _ = gen.apply({'params': state.gen.params}, z, cond_labels)
    fake_bags = lax.stop_gradient(fake_bags)

    def loss_fn(params):
        return discriminator_loss(disc, params, real_bags, real_labels, fake_bags, lambda_cls)

    (loss, (real_src, real_cls, fake_src)), grads = backward(loss_fn, state.disc.params, has_aux=True)
    new_disc, is_fin = state.disc.apply_gradients(grads)
    metrics = dict(
        d_loss=loss,
        d_src_acc=jnp.concatenate([real_src > 0, fake_src < 0]).mean(),
        d_cls_acc=acc_top1(real_cls, real_labels),
        d_finite=is_fin)
    return state.replace(disc=new_disc), metrics


def gen_step(gen, disc, state: GanState, real_bags, real_labels, z, cond_labels,
             lambda_cls=1., lambda_mil=.5, lambda_real=0.):
    """Single generator update against the frozen discriminator.

    lambda_real adds a supervised MIL term on the real batch through the classify path.
    """
    has_mil = hasattr(gen, 'classify')

    def loss_fn(params):
        fake_bags, mil = gen.apply({'params': params}, z, cond_labels)
        loss, fake_cls = generator_loss(disc, state.disc.params, fake_bags, cond_labels, mil, lambda_cls, lambda_mil)
        if has_mil and lambda_real:
            real_mil = gen.apply({'params': params}, real_bags, method=type(gen).classify)
            loss = loss + lambda_real * bag_nll(real_mil.bag_probs, real_labels)
        consistency = mil.bag_probs if mil is not None else fake_cls
        return loss, consistency

    (loss, consistency), grads = backward(loss_fn, state.gen.params, has_aux=True)
    new_gen, is_fin = state.gen.apply_gradients(grads)
    metrics = dict(
        g_loss=loss,
        g_mil_acc=acc_top1(consistency, cond_labels),
        g_finite=is_fin)
    return state.replace(gen=new_gen, step=state.step + 1), metrics


def create_gan_state(model_config, train_config, rng):
    gen, disc, gen_params, disc_params = create_model(model_config, rng=rng)
    state = GanState(
        step=0,
        gen=create_model_state(train_config, gen_params, train_config.lr_g),
        disc=create_model_state(train_config, disc_params, train_config.lr_d))
    return gen, disc, state


def heldout_accuracy(gen, disc, state, eval_set, batch_size, disc_apply=None, classify_apply=None):
    """Held-out accuracy of the discriminator class head and, if present, the MIL head."""
    disc_apply = disc_apply or make_disc_apply(disc)
    acc = dict(disc=float((predict_disc(disc_apply, state.disc.params, eval_set.instances, batch_size)
                           == eval_set.labels).mean()))
    if hasattr(gen, 'classify'):
        classify_apply = classify_apply or make_classify_apply(gen)
        acc['mil'] = float((predict_mil(classify_apply, state.gen.params, eval_set.instances, batch_size)
                            == eval_set.labels).mean())
    return acc


def train_cgan(bag_set, model_config, train_config, eval_set=None):
    """ Train generator and discriminator on a BagSet

    Args:
        bag_set: training bags
        model_config: ModelConfig
        train_config: TrainConfig
        eval_set: optional held-out bags, accuracies logged per epoch

    Returns:
        (generator, generator params, discriminator, discriminator params, History)
    """
    check_dataset(bag_set, model_config, train_config)
    rng = random.PRNGKey(train_config.seed)
    rng, model_create_rng = random.split(rng)
    gen, disc, state = create_gan_state(model_config, train_config, model_create_rng)

    p_disc_step = jax.jit(functools.partial(disc_step, gen, disc, lambda_cls=train_config.lambda_cls))
    p_gen_step = jax.jit(functools.partial(
        gen_step, gen, disc, lambda_cls=train_config.lambda_cls, lambda_mil=train_config.lambda_mil,
        lambda_real=train_config.lambda_real))
    disc_apply = make_disc_apply(disc)
    classify_apply = make_classify_apply(gen) if hasattr(gen, 'classify') else None

    history = History(HISTORY_COLUMNS)
    instances = bag_set.instances
    labels = bag_set.labels
    for epoch in range(train_config.epochs):
        t_start = time.time()
        meters = {k: AverageMeter() for k in HISTORY_COLUMNS[1:-1]}
        batches = epoch_batches(len(bag_set), train_config.batch_size, train_config.seed, epoch)
        for i, idx in enumerate(batches):
            real_bags = jnp.asarray(instances[idx])
            real_labels = jnp.asarray(labels[idx])
            rng, d_rng, g_rng = random.split(rng, 3)
            z, cond = sample_conditioning(d_rng, len(idx), model_config.noise_dim, model_config.num_classes)
            state, d_metrics = p_disc_step(state, real_bags, real_labels, z, cond)
            check_finite(float(d_metrics['d_loss']), d_metrics['d_finite'], 'discriminator', epoch, i)
            z, cond = sample_conditioning(g_rng, len(idx), model_config.noise_dim, model_config.num_classes)
            state, g_metrics = p_gen_step(state, real_bags, real_labels, z, cond)
            check_finite(float(g_metrics['g_loss']), g_metrics['g_finite'], 'generator', epoch, i)
            for k, meter in meters.items():
                meter.update(d_metrics[k] if k in d_metrics else g_metrics[k], len(idx))
        summary = {k: meter.avg for k, meter in meters.items()}
        seconds = time.time() - t_start
        history.append(epoch=epoch, seconds=seconds, **summary)
        logging_msg = 'train epoch: %d, d_loss: %.4f, g_loss: %.4f, d_src_acc: %.3f, d_cls_acc: %.3f, ' \
                      'g_mil_acc: %.3f, sec: %.2f'
        _logger.info(logging_msg, epoch, summary['d_loss'], summary['g_loss'], summary['d_src_acc'],
                     summary['d_cls_acc'], summary['g_mil_acc'], seconds)
        if eval_set is not None and len(eval_set):
            acc = heldout_accuracy(
                gen, disc, state, eval_set, train_config.eval_batch_size, disc_apply, classify_apply)
            _logger.info('eval epoch: %d, ' + ', '.join(f'{k}_acc: %.3f' for k in acc), epoch, *acc.values())

    return gen, state.gen.params, disc, state.disc.params, history
