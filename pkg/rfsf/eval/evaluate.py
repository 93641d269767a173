""" Classifier-head evaluation

Two heads can classify a bag: the discriminator class head ('disc') and the
Transformer generator's MIL head through its classify path ('mil'). Reports always
name the head they come from.
"""
import logging
import time

from rfsf.common.errors import ConfigError
from rfsf.common.metrics import confusion_matrix, metrics
from rfsf.linen import make_disc_apply, make_classify_apply, predict_disc, predict_mil

_logger = logging.getLogger(__name__)

HEADS = ('disc', 'mil')


def resolve_heads(head):
    if head == 'both':
        return HEADS
    if head not in HEADS:
        raise ConfigError(f'head must be one of {HEADS + ("both",)}, got {head}')
    return head,


def evaluate_head(head, bag_set, gen=None, gen_params=None, disc=None, disc_params=None, batch_size=256):
    """ MetricsReport of one head on a BagSet, with inference seconds per bag """
    if head == 'disc':
        apply_fn, params, predict_fn = make_disc_apply(disc), disc_params, predict_disc
    elif head == 'mil':
        if not hasattr(gen, 'classify'):
            raise ConfigError('the mil head needs a transformer generator')
        apply_fn, params, predict_fn = make_classify_apply(gen), gen_params, predict_mil
    else:
        raise ConfigError(f'unknown head {head}')
    bags = bag_set.instances
    predict_fn(apply_fn, params, bags[:batch_size], batch_size)  # compile outside the timing
    t_start = time.time()
    preds = predict_fn(apply_fn, params, bags, batch_size)
    seconds = time.time() - t_start
    cm = confusion_matrix(preds, bag_set.labels, bag_set.num_classes)
    report = metrics(cm, head=head, class_names=bag_set.class_names)
    report.seconds_per_bag = seconds / max(len(bag_set), 1)
    _logger.info(f'{head} head: accuracy {report.accuracy:.4f}, macro-F1 {report.macro_f1:.4f}, '
                 f'{1e3 * report.seconds_per_bag:.3f} ms/bag')
    return report


def evaluate_models(bag_set, gen, gen_params, disc, disc_params, head='both', batch_size=256):
    return [
        evaluate_head(h, bag_set, gen, gen_params, disc, disc_params, batch_size=batch_size)
        for h in resolve_heads(head)]
