""" Augmentation-benefit experiment

For each seed: keep a stratified fraction of the training bags, train a cGAN on it,
then train the MIL classifier once on the real subset and once on the subset
augmented with generated bags, and score both on the same held-out bags.
"""
import logging

import numpy as np
from sklearn.model_selection import train_test_split

from rfsf.common.config import overlay
from rfsf.train import augment_dataset, train_cgan, train_classifier
from .evaluate import evaluate_head

_logger = logging.getLogger(__name__)


def subsample(bag_set, fraction, seed):
    idx = np.arange(len(bag_set))
    keep, _ = train_test_split(idx, train_size=fraction, random_state=seed, stratify=bag_set.labels)
    return bag_set.subset(np.sort(keep))


def augmentation_experiment(train_set, test_set, model_config, train_config, seeds=(0, 1, 2, 3, 4), fraction=0.1):
    """Returns one row per seed (seed, n_real, n_augmented, real_acc, aug_acc) plus a mean row."""
    rows = []
    for seed in seeds:
        real = subsample(train_set, fraction, seed)
        config = overlay(train_config, dict(seed=seed, batch_size=min(train_config.batch_size, len(real))), 'train')
        gen, gen_params, _, _, _ = train_cgan(real, model_config, config)
        augmented = augment_dataset(real, gen, gen_params, config.aug_ratio, seed=seed)

        accs = {}
        for name, bags in (('real', real), ('aug', augmented)):
            clf, clf_params, _ = train_classifier(bags, model_config, config)
            accs[name] = evaluate_head('mil', test_set, gen=clf, gen_params=clf_params,
                                       batch_size=config.eval_batch_size).accuracy
        _logger.info(f'seed {seed}: real-only {accs["real"]:.4f}, augmented {accs["aug"]:.4f}')
        rows.append(dict(seed=seed, n_real=len(real), n_augmented=len(augmented),
                         real_acc=accs['real'], aug_acc=accs['aug']))
    rows.append(dict(
        seed='mean', n_real=float(np.mean([r['n_real'] for r in rows])),
        n_augmented=float(np.mean([r['n_augmented'] for r in rows])),
        real_acc=float(np.mean([r['real_acc'] for r in rows])),
        aug_acc=float(np.mean([r['aug_acc'] for r in rows]))))
    return rows
