""" Command line entry point

    python -m rfsf synth --states SYNTH3 --count-per-state 5 --seed 7 --out data/raw
    python -m rfsf preprocess --manifest data/raw/manifest.csv --out data/bags --test-fraction 0.2
    python -m rfsf train --bags data/bags/train.rfsb --train-config train_configs/desk.json --out runs/desk
    python -m rfsf eval --checkpoint runs/desk --bags data/bags/test.rfsb --head both --report runs/desk/eval

Every command writes a run_manifest.json into its output directory. Exit codes: 0 success,
2 invalid arguments or config, 3 I/O failure, 4 non-finite loss or gradient. The log level
comes from the RFSF_LOG environment variable (debug, info, warning, error).
"""
import argparse
import logging as std_logging
import os
import sys
import time

import numpy as np
from absl import flags
from absl import logging

from rfsf import __version__
from rfsf.common.config import default_model_config, default_train_config, default_preprocess_config,\
    default_synth_config, load_config, overlay, validate_model_config
from rfsf.common.constants import get_label_set, list_label_sets
from rfsf.common.errors import EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERICAL, ConfigError, ContractError,\
    DimensionError, FormatError, NumericalError
from rfsf.common.io import file_sha256, get_outdir
from rfsf.data import bags_from_signals, export_dataset, get_profile, load_manifest, load_signals, make_dataset,\
    read_bags, split_bags, write_bags
from rfsf.data.preprocess import window_count
from rfsf.eval import ablation_run, augmentation_experiment, complexity_comparison, complexity_report, evaluate_models,\
    explain, knn_baseline
from rfsf.eval.reports import write_json, write_metrics_json, write_metrics_csv, write_confusion_csv,\
    write_confusion_gnuplot, write_table, write_saliency_csv
from rfsf.linen import load_models, save_models
from rfsf.train import train_cgan

LOG_LEVELS = ('debug', 'info', 'warning', 'error')
RUN_MANIFEST = 'run_manifest.json'
BAGS_FILE = 'bags.rfsb'
TRAIN_BAGS_FILE = 'train.rfsb'
TEST_BAGS_FILE = 'test.rfsb'


class RunManifest:
    """ Provenance record written once per output directory """

    def __init__(self, command, argv, seed=None):
        self.command = command
        self.argv = list(argv)
        self.seed = seed
        self.configs = {}
        self.inputs = {}
        self.outputs = []
        self._t_start = time.time()

    def add_config(self, path):
        if path:
            self.configs[path] = file_sha256(path)

    def add_input(self, path):
        self.inputs[path] = file_sha256(path)

    def add_output(self, path):
        self.outputs.append(path)

    def write(self, outdir):
        filename = os.path.join(outdir, RUN_MANIFEST)
        write_json(filename, dict(
            command=self.command,
            argv=self.argv,
            seed=self.seed,
            configs=self.configs,
            inputs=self.inputs,
            outputs=sorted(self.outputs),
            version=__version__,
            wall_seconds=time.time() - self._t_start,
        ))
        return filename


def setup_logging():
    level = os.environ.get('RFSF_LOG', 'info').lower()
    if level not in LOG_LEVELS:
        level = 'info'
    flags.FLAGS.mark_as_parsed()
    logging.use_absl_handler()
    logging.set_verbosity(level)
    std_logging.getLogger().setLevel(level.upper())


def _configs(path):
    """ model / train / preprocess ConfigDicts from an optional JSON file """
    if path:
        return load_config(path)
    return dict(model=default_model_config(), train=default_train_config(), preprocess=default_preprocess_config())


def _fit_model_config(model_config, bag_set):
    """ Take class count and bag geometry from the data """
    shape = dict(num_classes=bag_set.num_classes, bag_size=bag_set.bag_size, instance_dim=bag_set.instance_dim)
    changed = {k: v for k, v in shape.items() if model_config[k] != v}
    if changed:
        logging.info('Model config follows the bags: %s', changed)
        model_config = overlay(model_config, changed, 'model')
    validate_model_config(model_config)
    return model_config


def _write_reports(outdir, reports, run, timing=True):
    filename = os.path.join(outdir, 'metrics.json')
    write_metrics_json(filename, reports, timing=timing)
    run.add_output(filename)
    filename = os.path.join(outdir, 'metrics.csv')
    write_metrics_csv(filename, reports)
    run.add_output(filename)
    for r in reports:
        filename = os.path.join(outdir, f'confusion_{r.head}.csv')
        write_confusion_csv(filename, r.confusion, r.class_names)
        run.add_output(filename)
        filename = os.path.join(outdir, f'confusion_{r.head}.dat')
        write_confusion_gnuplot(filename, r.confusion)
        run.add_output(filename)


def cmd_synth(args, run):
    synth = default_synth_config()
    snr = args.snr if len(args.snr) == 2 else args.snr * 2
    synth = overlay(synth, dict(
        label_set=args.states, count_per_state=args.count_per_state, profile=args.profile,
        snr_db_min=snr[0], snr_db_max=snr[1], n_samples=args.samples, seed=args.seed), 'synth')
    if synth.count_per_state < 1:
        raise ConfigError(f'count must be >= 1, got {synth.count_per_state}')
    if synth.snr_db_min > synth.snr_db_max:
        raise ConfigError(f'--snr low ({synth.snr_db_min}) above high ({synth.snr_db_max})')
    run.seed = synth.seed

    names = get_label_set(synth.label_set)
    if names is None:
        raise ConfigError(f'Unknown label set {synth.label_set}, choose from {list_label_sets()}')
    profile = get_profile(synth.profile, synth.label_set)
    counts = {name: synth.count_per_state for name in names}
    window_len = _configs(args.config)['preprocess'].window_len
    run.add_config(args.config)
    signals = make_dataset(
        counts, profile, (synth.snr_db_min, synth.snr_db_max), synth.n_samples, synth.seed, jobs=args.jobs,
        window_len=window_len)
    outdir = get_outdir(args.out)
    manifest = export_dataset(signals, outdir)
    run.add_output(manifest)
    print(f'Wrote {len(signals)} signals of {synth.n_samples} samples to {outdir}')
    return outdir


def cmd_preprocess(args, run):
    config = _configs(args.config)['preprocess']
    run.add_config(args.config)
    run.seed = args.seed
    manifest = load_manifest(args.manifest)
    run.add_input(args.manifest)
    signals = load_signals(manifest, jobs=args.jobs)
    bag_set, reports = bags_from_signals(
        signals, config, num_classes=manifest.num_classes, class_names=manifest.class_names, jobs=args.jobs)

    n_windows = 0
    for s, r in zip(signals, reports):
        w = window_count(len(s), config.window_len, config.stride)
        n_windows += w
        if r.error:
            print(f'{r.source}: {r.n_samples} samples, {w} windows, 0 bags ({r.error})', file=sys.stderr)
    print(f'{len(signals)} signals, {n_windows} windows, {len(bag_set)} bags of {config.bag_size}')

    outdir = get_outdir(args.out)
    filename = os.path.join(outdir, BAGS_FILE)
    write_bags(filename, bag_set)
    run.add_output(filename)
    if args.test_fraction:
        train_set, test_set = split_bags(bag_set, args.test_fraction, seed=args.seed)
        for name, subset in ((TRAIN_BAGS_FILE, train_set), (TEST_BAGS_FILE, test_set)):
            filename = os.path.join(outdir, name)
            write_bags(filename, subset)
            run.add_output(filename)
        print(f'split: {len(train_set)} train / {len(test_set)} test bags')
    return outdir


def cmd_train(args, run):
    model_config = _configs(args.model_config or args.config)['model']
    train_config = _configs(args.train_config or args.config)['train']
    for path in {args.model_config, args.train_config, args.config}:
        run.add_config(path)
    if args.seed is not None:
        train_config = overlay(train_config, dict(seed=args.seed), 'train')
    if args.epochs is not None:
        train_config = overlay(train_config, dict(epochs=args.epochs), 'train')
    run.seed = train_config.seed

    bag_set = read_bags(args.bags)
    run.add_input(args.bags)
    eval_set = None
    if args.eval_bags:
        eval_set = read_bags(args.eval_bags)
        run.add_input(args.eval_bags)
    model_config = _fit_model_config(model_config, bag_set)

    gen, gen_params, disc, disc_params, history = train_cgan(bag_set, model_config, train_config, eval_set)

    outdir = get_outdir(args.out)
    save_models(outdir, model_config, gen_params, disc_params)
    for name in ('generator.ckpt', 'discriminator.ckpt'):
        run.add_output(os.path.join(outdir, name))
    filename = os.path.join(outdir, 'history.csv')
    history.to_csv(filename, timing=not args.no_timing)
    run.add_output(filename)
    print(f'Trained {train_config.epochs} epochs on {len(bag_set)} bags, checkpoints in {outdir}')
    return outdir


def cmd_eval(args, run):
    gen, gen_params, disc, disc_params, _ = load_models(args.checkpoint)
    for name in ('generator.ckpt', 'discriminator.ckpt'):
        run.add_input(os.path.join(args.checkpoint, name))
    bag_set = read_bags(args.bags)
    run.add_input(args.bags)
    reports = evaluate_models(bag_set, gen, gen_params, disc, disc_params, head=args.head,
                              batch_size=args.batch_size)
    if args.knn_train:
        reports.append(knn_baseline(read_bags(args.knn_train), bag_set, k=args.knn_k))
        run.add_input(args.knn_train)

    outdir = get_outdir(args.report)
    _write_reports(outdir, reports, run, timing=not args.no_timing)
    for r in reports:
        print(f'{r.head}: accuracy {r.accuracy:.4f}, macro-F1 {r.macro_f1:.4f} ({r.total} bags)')
    return outdir


def _train_test(args, run):
    bag_set = read_bags(args.bags)
    run.add_input(args.bags)
    if args.test_bags:
        run.add_input(args.test_bags)
        return bag_set, read_bags(args.test_bags)
    return split_bags(bag_set, args.test_fraction, seed=args.seeds[0])


def cmd_ablate(args, run):
    configs = _configs(args.config)
    run.add_config(args.config)
    run.seed = list(args.seeds)
    train_set, test_set = _train_test(args, run)
    model_config = _fit_model_config(configs['model'], train_set)

    result = ablation_run(train_set, test_set, model_config, configs['train'], seeds=args.seeds,
                          variants=args.variants, jobs=args.jobs)
    outdir = get_outdir(args.out)
    filename = os.path.join(outdir, 'ablation.csv')
    write_table(filename, result.rows())
    run.add_output(filename)
    filename = os.path.join(outdir, 'ablation.json')
    write_json(filename, dict(rows=result.rows(), orderings=result.check_orderings()))
    run.add_output(filename)
    for row in result.rows():
        print(f'{row["variant"]:>8s}  {row["mean_accuracy"]:.4f}  {row["description"]}')
    return outdir


def cmd_augment(args, run):
    configs = _configs(args.config)
    run.add_config(args.config)
    run.seed = list(args.seeds)
    train_set, test_set = _train_test(args, run)
    model_config = _fit_model_config(configs['model'], train_set)
    train_config = configs['train']
    if args.ratio is not None:
        train_config = overlay(train_config, dict(aug_ratio=args.ratio), 'train')

    rows = augmentation_experiment(
        train_set, test_set, model_config, train_config, seeds=args.seeds, fraction=args.fraction)
    outdir = get_outdir(args.out)
    filename = os.path.join(outdir, 'augmentation.csv')
    write_table(filename, rows)
    run.add_output(filename)
    mean = rows[-1]
    print(f'real-only {mean["real_acc"]:.4f}, augmented {mean["aug_acc"]:.4f} '
          f'(rho={train_config.aug_ratio}, {len(args.seeds)} seeds)')
    return outdir


def cmd_explain(args, run):
    gen, gen_params, _, _, _ = load_models(args.checkpoint)
    run.add_input(os.path.join(args.checkpoint, 'generator.ckpt'))
    bag_set = read_bags(args.bags)
    run.add_input(args.bags)
    if not 0 <= args.bag_index < len(bag_set):
        raise ContractError(f'--bag-index {args.bag_index} outside [0, {len(bag_set)})')
    explanation = explain(bag_set.instances[args.bag_index], gen, gen_params)

    outdir = get_outdir(args.out)
    filename = os.path.join(outdir, 'saliency.csv')
    write_saliency_csv(filename, explanation, bag_set.class_names)
    run.add_output(filename)
    filename = os.path.join(outdir, 'explanation.json')
    write_json(filename, dict(
        bag_index=args.bag_index,
        label=int(bag_set.labels[args.bag_index]),
        predicted=explanation.predicted,
        top_instance=explanation.top_instance,
        bag_probs=np.asarray(explanation.bag_probs).tolist()))
    run.add_output(filename)
    print(f'bag {args.bag_index}: predicted {explanation.predicted}, most salient instance '
          f'{explanation.top_instance}')
    return outdir


def cmd_complexity(args, run):
    model_config = _configs(args.config)['model']
    run.add_config(args.config)
    report = complexity_report(model_config)
    outdir = get_outdir(args.out)
    filename = os.path.join(outdir, 'complexity.json')
    write_json(filename, report.to_dict())
    run.add_output(filename)
    filename = os.path.join(outdir, 'comparison.csv')
    write_table(filename, complexity_comparison(model_config))
    run.add_output(filename)
    print(f'generator {report.generator_macs} MACs, discriminator {report.discriminator_macs} MACs, '
          f'total {report.total_macs}')
    return outdir


def _add_experiment_args(p):
    p.add_argument('--bags', required=True, help='training bags (split with --test-fraction without --test-bags)')
    p.add_argument('--test-bags', default='', help='held-out bags')
    p.add_argument('--test-fraction', type=float, default=0.2)
    p.add_argument('--config', default='', help='JSON config file')
    p.add_argument('--out', required=True)


def build_parser():
    parser = argparse.ArgumentParser(prog='rfsf', description='UAV flight-state classification from RF signals')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('synth', help='synthesize a labeled raw-IQ dataset')
    p.add_argument('--states', default='SYNTH3', help='label set (default: SYNTH3)')
    p.add_argument('--count-per-state', type=int, default=5)
    p.add_argument('--profile', default='synthetic')
    p.add_argument('--snr', type=float, nargs='+', default=[0., 20.], metavar='DB', help='SNR or SNR range in dB')
    p.add_argument('--samples', type=int, default=5248, help='IQ samples per signal')
    p.add_argument('--config', default='', help='JSON config, its preprocess window bounds --samples')
    p.add_argument('--seed', type=int, default=7)
    p.add_argument('--jobs', type=int, default=1)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser('preprocess', help='raw IQ manifest to a bag container')
    p.add_argument('--manifest', required=True)
    p.add_argument('--config', default='', help='JSON config file')
    p.add_argument('--test-fraction', type=float, default=0., help='also write a stratified train / test split')
    p.add_argument('--seed', type=int, default=7)
    p.add_argument('--jobs', type=int, default=1)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser('train', help='train the conditional GAN')
    p.add_argument('--bags', required=True)
    p.add_argument('--eval-bags', default='', help='held-out bags logged each epoch')
    p.add_argument('--config', default='', help='JSON config file for both sections')
    p.add_argument('--model-config', default='')
    p.add_argument('--train-config', default='')
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--epochs', type=int, default=None)
    p.add_argument('--no-timing', action='store_true', default=False, help='omit wall times from history.csv')
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('eval', help='evaluate checkpoints on bags')
    p.add_argument('--checkpoint', required=True, help='run directory with generator.ckpt and discriminator.ckpt')
    p.add_argument('--bags', required=True)
    p.add_argument('--head', default='both', choices=('disc', 'mil', 'both'))
    p.add_argument('--knn-train', default='', help='training bags for an added k-NN baseline report')
    p.add_argument('--knn-k', type=int, default=1)
    p.add_argument('--batch-size', type=int, default=256)
    p.add_argument('--no-timing', action='store_true', default=False, help='omit seconds per bag from metrics.json')
    p.add_argument('--report', required=True, help='output directory')
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser('ablate', help='five-variant ablation')
    _add_experiment_args(p)
    p.add_argument('--seeds', type=int, nargs='+', default=[0, 1, 2])
    p.add_argument('--variants', nargs='+', default=None)
    p.add_argument('--jobs', type=int, default=1)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser('augment', help='augmentation benefit on a subsampled training set')
    _add_experiment_args(p)
    p.add_argument('--seeds', type=int, nargs='+', default=[0, 1, 2, 3, 4])
    p.add_argument('--fraction', type=float, default=0.1)
    p.add_argument('--ratio', type=float, default=None, help='synthetic:real ratio (default: train.aug_ratio)')
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser('explain', help='per-instance saliency of one bag')
    p.add_argument('--checkpoint', required=True)
    p.add_argument('--bags', required=True)
    p.add_argument('--bag-index', type=int, default=0)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser('complexity', help='analytic MAC counts and model family comparison')
    p.add_argument('--config', default='')
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_complexity)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    setup_logging()

    run = RunManifest(args.command, argv)
    try:
        outdir = args.func(args, run)
        run.write(outdir)
    except NumericalError as e:
        print(f'rfsf {args.command}: numerical failure: {e}', file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, FormatError) as e:
        print(f'rfsf {args.command}: {e}', file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ContractError, DimensionError, IndexError) as e:
        print(f'rfsf {args.command}: {e}', file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
