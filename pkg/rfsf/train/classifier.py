""" Supervised training of the Transformer-MIL classify path
"""
import functools
import logging
import time

import jax
import jax.numpy as jnp
from jax import random

from rfsf.common.errors import ConfigError
from rfsf.common.loss import bag_nll
from rfsf.common.metrics import AverageMeter, acc_top1
from rfsf.common.tensor_core import backward
from rfsf.linen import create_generator, init_generator, make_classify_apply, predict_mil
from .train_state import History, create_model_state, check_dataset, epoch_batches, check_finite

_logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ('epoch', 'loss', 'acc', 'seconds')


def classifier_step(model, state, bags, labels):
    def loss_fn(params):
        mil = model.apply({'params': params}, bags, method=type(model).classify)
        return bag_nll(mil.bag_probs, labels), mil.bag_probs

    (loss, probs), grads = backward(loss_fn, state.params, has_aux=True)
    new_state, is_fin = state.apply_gradients(grads)
    metrics = dict(loss=loss, acc=acc_top1(probs, labels), finite=is_fin)
    return new_state, metrics


def train_classifier(bag_set, model_config, train_config, eval_set=None):
    """ Train encoder + MIL heads with cross entropy on the bag prediction

    Returns:
        (model, params, History)
    """
    if model_config.generator_type != 'transformer':
        raise ConfigError('train_classifier needs the transformer generator architecture')
    check_dataset(bag_set, model_config, train_config)
    rng = random.PRNGKey(train_config.seed)
    rng, model_create_rng = random.split(rng)
    model = create_generator(model_config)
    params = init_generator(model, model_config, model_create_rng)
    state = create_model_state(train_config, params, train_config.lr_g)

    p_step = jax.jit(functools.partial(classifier_step, model))
    classify_apply = make_classify_apply(model) if eval_set is not None else None
    history = History(HISTORY_COLUMNS)
    for epoch in range(train_config.epochs):
        t_start = time.time()
        loss_meter, acc_meter = AverageMeter(), AverageMeter()
        batches = epoch_batches(len(bag_set), train_config.batch_size, train_config.seed, epoch)
        for i, idx in enumerate(batches):
            state, metrics = p_step(state, jnp.asarray(bag_set.instances[idx]), jnp.asarray(bag_set.labels[idx]))
            check_finite(float(metrics['loss']), metrics['finite'], 'classifier', epoch, i)
            loss_meter.update(metrics['loss'], len(idx))
            acc_meter.update(metrics['acc'], len(idx))
        seconds = time.time() - t_start
        history.append(epoch=epoch, loss=loss_meter.avg, acc=acc_meter.avg, seconds=seconds)
        _logger.info('classifier epoch: %d, loss: %.4f, acc: %.3f, sec: %.2f',
                     epoch, loss_meter.avg, acc_meter.avg, seconds)
        if classify_apply is not None and len(eval_set):
            acc = (predict_mil(classify_apply, state.params, eval_set.instances, train_config.eval_batch_size)
                   == eval_set.labels).mean()
            _logger.info('classifier eval epoch: %d, acc: %.3f', epoch, acc)

    return model, state.params, history
