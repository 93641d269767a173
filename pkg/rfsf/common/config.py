""" Default configurations and JSON config files

Defaults live in locked ml_collections ConfigDicts so an unknown key in a config
file is rejected instead of silently ignored. A JSON config file may carry any
subset of the `model`, `train` and `preprocess` sections plus a `schema_version`.
"""
import json
import logging

import ml_collections

from .constants import DEFAULT_DISC_CHANNELS, DEFAULT_CNN_GEN_CHANNELS
from .errors import ConfigError
from .optim.optim_factory import OPTIMIZERS

__all__ = [
    'SCHEMA_VERSION', 'default_model_config', 'default_train_config', 'default_preprocess_config',
    'default_synth_config', 'load_config', 'overlay', 'model_config_from_dict',
    'validate_model_config', 'validate_train_config', 'validate_preprocess_config', 'ff_features']

_logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

GENERATOR_TYPES = ('transformer', 'cnn')
CHANNEL_ATTENTION_MODES = ('learned', 'uniform', 'none')
DOPPLER_MODES = ('oracle', 'off')
FF_ACTIVATIONS = ('relu', 'gelu', 'tanh')


def default_model_config():
    config = ml_collections.ConfigDict()

    # transformer-MIL generator
    config.n_layers = 4
    config.n_heads = 8
    config.d_model = 64
    config.d_ff = 0  # 4 * d_model if 0
    config.bag_size = 10
    config.instance_dim = 256  # must equal the preprocess output (fft_len)
    config.noise_dim = 32
    config.num_classes = 3
    config.use_mil = True
    config.use_pos_enc = True
    config.generator_type = 'transformer'
    config.ff_act = 'relu'

    # cnn generator (ablation only), base width matched to the transformer param count if 0
    config.cnn_gen_channels = DEFAULT_CNN_GEN_CHANNELS
    config.cnn_gen_base_channels = 0

    # channel attention cnn discriminator
    config.disc_channels = DEFAULT_DISC_CHANNELS
    config.kernel_size = 3
    config.channel_attention = 'learned'

    config.lock()
    return config


def default_train_config():
    config = ml_collections.ConfigDict()

    config.epochs = 30  # 300 for the full protocol, see train_configs/full.json
    config.batch_size = 64
    config.eval_batch_size = 256
    config.seed = 7

    config.opt = 'adam'
    config.lr_d = 0.01
    config.lr_g = 0.005
    config.opt_beta1 = 0.9
    config.opt_beta2 = 0.999
    config.opt_eps = 1e-8

    config.lambda_cls = 1.0  # auxiliary class loss weight
    config.lambda_mil = 0.5  # generator MIL consistency weight
    config.lambda_real = 1.0  # supervised MIL loss on real bags in the generator step
    config.aug_ratio = 1.0  # synthetic:real

    config.lock()
    return config


def default_preprocess_config():
    config = ml_collections.ConfigDict()
    config.window_len = 256
    config.stride = 128
    config.fft_len = 256
    config.n_bands = 8
    config.zscore_eps = 1e-8
    config.doppler_mode = 'oracle'
    config.bag_size = 10
    config.lock()
    return config


def default_synth_config():
    config = ml_collections.ConfigDict()
    config.label_set = 'SYNTH3'
    config.count_per_state = 5
    config.profile = 'synthetic'
    config.snr_db_min = 0.
    config.snr_db_max = 20.
    config.n_samples = 5248  # 40 windows of 256 at stride 128
    config.seed = 7
    config.lock()
    return config


def ff_features(config):
    return config.d_ff or 4 * config.d_model


def overlay(config, overrides, section=''):
    """Apply a dict of overrides to a locked ConfigDict, returning a new ConfigDict."""
    config = ml_collections.ConfigDict(config.to_dict())
    config.lock()
    for k, v in overrides.items():
        if k not in config:
            raise ConfigError(f'Unknown {section or "config"} key: {k}')
        if isinstance(config[k], tuple) and isinstance(v, list):
            v = tuple(v)
        try:
            config[k] = v
        except (TypeError, ValueError) as e:
            raise ConfigError(f'Bad value for {section or "config"}.{k}: {v!r} ({e})')
    return config


def load_config(path):
    """Read a JSON config file into validated model / train / preprocess ConfigDicts.

    Raises:
        OSError: file missing or unreadable.
        ConfigError: malformed JSON, wrong schema version or invalid values.
    """
    with open(path, 'r', encoding='utf-8') as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f'Config {path} is not valid JSON: {e}')
    if not isinstance(raw, dict):
        raise ConfigError(f'Config {path} must be a JSON object')
    version = raw.get('schema_version', SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f'Unsupported schema_version {version}, expected {SCHEMA_VERSION}')
    unknown = set(raw.keys()) - {'schema_version', 'model', 'train', 'preprocess'}
    if unknown:
        raise ConfigError(f'Unknown config sections: {sorted(unknown)}')

    model = overlay(default_model_config(), raw.get('model', {}), 'model')
    train = overlay(default_train_config(), raw.get('train', {}), 'train')
    preprocess = overlay(default_preprocess_config(), raw.get('preprocess', {}), 'preprocess')
    validate_model_config(model)
    validate_train_config(train)
    validate_preprocess_config(preprocess)
    _logger.info(f'Loaded config {path}')
    return dict(model=model, train=train, preprocess=preprocess)


def model_config_from_dict(d):
    config = overlay(default_model_config(), d, 'model')
    validate_model_config(config)
    return config


def validate_model_config(config):
    if config.d_model % config.n_heads:
        raise ConfigError(f'd_model ({config.d_model}) must be divisible by n_heads ({config.n_heads})')
    if config.use_pos_enc and config.d_model % 2:
        raise ConfigError(f'd_model ({config.d_model}) must be even for sinusoidal positional encoding')
    if config.num_classes < 2:
        raise ConfigError(f'num_classes must be >= 2, got {config.num_classes}')
    if config.bag_size < 1 or config.n_layers < 1 or config.instance_dim < 1 or config.noise_dim < 1:
        raise ConfigError('bag_size, n_layers, instance_dim and noise_dim must be >= 1')
    if config.generator_type not in GENERATOR_TYPES:
        raise ConfigError(f'generator_type must be one of {GENERATOR_TYPES}')
    if config.ff_act not in FF_ACTIVATIONS:
        raise ConfigError(f'ff_act must be one of {FF_ACTIVATIONS}')
    if config.channel_attention not in CHANNEL_ATTENTION_MODES:
        raise ConfigError(f'channel_attention must be one of {CHANNEL_ATTENTION_MODES}')
    if not config.disc_channels or config.kernel_size < 1:
        raise ConfigError('disc_channels must be non-empty and kernel_size >= 1')


def validate_train_config(config):
    if config.opt not in OPTIMIZERS:
        raise ConfigError(f'opt must be one of {OPTIMIZERS}, got {config.opt}')
    if config.epochs < 0:
        raise ConfigError(f'epochs must be >= 0, got {config.epochs}')
    if config.batch_size < 1 or config.eval_batch_size < 1:
        raise ConfigError('batch sizes must be >= 1')
    if config.lr_d <= 0 or config.lr_g <= 0:
        raise ConfigError('learning rates must be > 0')
    if config.aug_ratio < 0:
        raise ConfigError('aug_ratio must be >= 0')


def validate_preprocess_config(config):
    if config.window_len < 1 or not 1 <= config.stride <= config.window_len:
        raise ConfigError(f'need 1 <= stride ({config.stride}) <= window_len ({config.window_len})')
    if config.fft_len != config.window_len:
        raise ConfigError('fft_len must equal window_len')
    if not 1 <= config.n_bands <= config.fft_len:
        raise ConfigError(f'n_bands must be in [1, {config.fft_len}]')
    if config.zscore_eps <= 0:
        raise ConfigError('zscore_eps must be > 0')
    if config.doppler_mode not in DOPPLER_MODES:
        raise ConfigError(f'doppler_mode must be one of {DOPPLER_MODES}')
    if config.bag_size < 1:
        raise ConfigError('bag_size must be >= 1')
