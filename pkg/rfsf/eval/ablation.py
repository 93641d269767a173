""" Five-variant ablation harness

    model1  CNN generator + CNN discriminator, no attention anywhere
    model2  Transformer generator without MIL + CNN discriminator without channel attention
    model3  Transformer generator without MIL + channel-attention discriminator
    model4  Transformer-MIL generator + CNN discriminator without channel attention
    full    Transformer-MIL generator + channel-attention discriminator

Every variant is trained with train_cgan per seed and scored on the discriminator class head.
"""
import concurrent.futures
import dataclasses
import logging
from typing import Dict, List

import numpy as np

from rfsf.common.config import overlay, validate_model_config
from rfsf.train import train_cgan
from .evaluate import evaluate_head

_logger = logging.getLogger(__name__)

ABLATION_VARIANTS = (
    ('model1', 'CNN gen + CNN disc', dict(generator_type='cnn', use_mil=False, channel_attention='none')),
    ('model2', 'Transformer gen w/o MIL + CNN disc w/o CA', dict(use_mil=False, channel_attention='none')),
    ('model3', 'Transformer gen w/o MIL + CNN disc with CA', dict(use_mil=False, channel_attention='learned')),
    ('model4', 'Transformer-MIL gen + CNN disc w/o CA', dict(use_mil=True, channel_attention='none')),
    ('full', 'Transformer-MIL gen + CNN disc with CA', dict(use_mil=True, channel_attention='learned')),
)


def variant_configs(model_config):
    out = []
    for name, desc, overrides in ABLATION_VARIANTS:
        overrides = dict(overrides)
        overrides.setdefault('generator_type', 'transformer')
        config = overlay(model_config, overrides, 'model')
        validate_model_config(config)
        out.append((name, desc, config))
    return out


@dataclasses.dataclass
class AblationResult:
    seeds: List[int]
    accuracy: Dict[str, List[float]]  # variant -> per-seed disc head accuracy
    macro_f1: Dict[str, List[float]]
    descriptions: Dict[str, str]

    def mean_accuracy(self, variant):
        return float(np.mean(self.accuracy[variant]))

    def rows(self):
        rows = []
        for name in self.accuracy:
            row = dict(variant=name, description=self.descriptions[name])
            row.update({f'seed_{s}': a for s, a in zip(self.seeds, self.accuracy[name])})
            row.update(mean_accuracy=self.mean_accuracy(name), mean_macro_f1=float(np.mean(self.macro_f1[name])))
            rows.append(row)
        return rows

    def check_orderings(self):
        """ Mean-accuracy orderings: full >= every variant, model4 >= model2

        Per-seed violations are logged only.
        """
        checks = {}
        pairs = [('full', v) for v in self.accuracy if v != 'full'] + [('model4', 'model2')]
        for hi, lo in pairs:
            if hi not in self.accuracy or lo not in self.accuracy:
                continue
            for s, a_hi, a_lo in zip(self.seeds, self.accuracy[hi], self.accuracy[lo]):
                if a_hi < a_lo:
                    _logger.warning(f'seed {s}: {hi} ({a_hi:.4f}) below {lo} ({a_lo:.4f})')
            checks[f'{hi}>={lo}'] = self.mean_accuracy(hi) >= self.mean_accuracy(lo)
        return checks


def _run_one(train_set, test_set, config, train_config, seed):
    train_config = overlay(train_config, dict(seed=seed), 'train')
    gen, gen_params, disc, disc_params, _ = train_cgan(train_set, config, train_config)
    report = evaluate_head('disc', test_set, gen, gen_params, disc, disc_params, train_config.eval_batch_size)
    return report.accuracy, report.macro_f1


def ablation_run(train_set, test_set, model_config, train_config, seeds=(0, 1, 2), variants=None, jobs=1):
    """ Train and score every ablation variant for every seed

    Args:
        variants: optional subset of variant names
        jobs: variants x seeds trained concurrently, results merged in a fixed order
    """
    configs = [c for c in variant_configs(model_config) if variants is None or c[0] in variants]
    tasks = [(name, config, seed) for name, _, config in configs for seed in seeds]

    def _task(task):
        name, config, seed = task
        _logger.info(f'Ablation {name}, seed {seed}')
        return _run_one(train_set, test_set, config, train_config, seed)

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]

    accuracy = {name: [] for name, _, _ in configs}
    macro_f1 = {name: [] for name, _, _ in configs}
    for (name, _, _), (acc, f1) in zip(tasks, results):
        accuracy[name].append(acc)
        macro_f1[name].append(f1)
    result = AblationResult(
        seeds=list(seeds), accuracy=accuracy, macro_f1=macro_f1,
        descriptions={name: desc for name, desc, _ in configs})
    for name in accuracy:
        _logger.info(f'{name}: mean accuracy {result.mean_accuracy(name):.4f}')
    return result
