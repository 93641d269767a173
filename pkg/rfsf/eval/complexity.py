""" Analytic multiply-accumulate counts

One MAC is one multiply-accumulate. Adds, activations, norms, embedding lookups and
the channel-attention rescale are not counted. Counts are per bag (batch of one) and
match rfsf.linen.count_macs on the same model exactly.
"""
import dataclasses

from rfsf.common.config import ff_features
from rfsf.linen.discriminator_linen import conv_out_len
from rfsf.linen.helpers import match_cnn_base_channels

__all__ = [
    'dense_macs', 'conv_macs', 'attention_block_macs', 'attention_score_macs', 'mac_count_generator',
    'mac_count_discriminator', 'ComplexityReport', 'complexity_report', 'complexity_comparison']


def dense_macs(rows, in_features, out_features):
    return rows * in_features * out_features


def conv_macs(c_in, c_out, kernel_size, l_out):
    return c_in * c_out * kernel_size * l_out


def attention_score_macs(t, d):
    """Q K^T scores plus attention-weighted values, the t^2 d term."""
    return 2 * t * t * d


def attention_block_macs(t, d, d_ff):
    qkvo = 4 * dense_macs(t, d, d)
    ff = dense_macs(t, d, d_ff) + dense_macs(t, d_ff, d)
    return qkvo + attention_score_macs(t, d) + ff


def _pool_macs(config, t, d):
    k = config.num_classes
    if config.use_mil:
        return dense_macs(t, d, 1) + dense_macs(t, d, k) + t * k
    return dense_macs(1, d, k) + t * k


def _cnn_generator_macs(config):
    channels = tuple(config.cnn_gen_channels)
    base = config.cnn_gen_base_channels or match_cnn_base_channels(config)
    length = config.bag_size * config.instance_dim
    base_len = length // 2 ** len(channels)
    macs = dense_macs(1, 2 * config.noise_dim, base_len * base)
    c_in, l_in = base, base_len
    for c in channels:
        macs += l_in * c_in * c * config.kernel_size  # transposed conv, per input position
        c_in, l_in = c, l_in * 2
    return macs + conv_macs(c_in, 1, config.kernel_size, length)


def mac_count_generator(config, path='generate'):
    """ MACs of one generator forward pass

    Args:
        path: 'generate' (noise + label -> bag) or 'classify' (bag -> MIL output)
    """
    if config.generator_type == 'cnn':
        return _cnn_generator_macs(config)
    t, d, inst = config.bag_size, config.d_model, config.instance_dim
    blocks = config.n_layers * attention_block_macs(t, d, ff_features(config))
    pool = _pool_macs(config, t, d)
    if path == 'classify':
        return dense_macs(t, inst, d) + blocks + pool
    return dense_macs(1, config.noise_dim, t * d) + blocks + pool + dense_macs(t, d, inst)


def mac_count_discriminator(config, input_len=None):
    """ sum C_in * C_out * K * L_out over the conv stack + channel attention + heads """
    length = input_len or config.bag_size * config.instance_dim
    macs = 0
    c_in = 1
    for c in config.disc_channels:
        length = conv_out_len(length, config.kernel_size)
        macs += conv_macs(c_in, c, config.kernel_size, length)
        c_in = c
    if config.channel_attention == 'learned':
        macs += dense_macs(1, 2 * c_in, c_in)
    return macs + dense_macs(1, c_in, 1) + dense_macs(1, c_in, config.num_classes)


@dataclasses.dataclass
class ComplexityReport:
    generator_macs: int
    discriminator_macs: int
    classify_macs: int
    attention_term: int  # N_layer * L^2 * d
    conv_term: int  # N_cnn * C * K * L * d

    @property
    def total_macs(self):
        return self.generator_macs + self.discriminator_macs

    def to_dict(self):
        d = dataclasses.asdict(self)
        d['total_macs'] = self.total_macs
        return d


def _dominant_terms(config):
    t, d = config.bag_size, config.d_model
    attention = config.n_layers * t * t * d if config.generator_type == 'transformer' else 0
    conv = len(config.disc_channels) * max(config.disc_channels) * config.kernel_size * t * d
    return attention, conv


def complexity_report(config) -> ComplexityReport:
    attention, conv = _dominant_terms(config)
    return ComplexityReport(
        generator_macs=mac_count_generator(config),
        discriminator_macs=mac_count_discriminator(config),
        classify_macs=mac_count_generator(config, 'classify') if config.generator_type == 'transformer' else 0,
        attention_term=attention,
        conv_term=conv,
    )


def complexity_comparison(config):
    """ Dominant-term operation counts of representative model families at the configured sizes

    L is the bag size (sequence length), d the model width, C the widest conv channel count,
    K the kernel size, N the layer count of each family.
    """
    t, d, n = config.bag_size, config.d_model, config.n_layers
    n_cnn, c, k = len(config.disc_channels), max(config.disc_channels), config.kernel_size
    attention, conv = _dominant_terms(config)
    return [
        dict(model='MC-LSTM', structure='LSTM stack', complexity='N_layer L d^2', ops=n * t * d * d),
        dict(model='MC-CNN', structure='1D CNN', complexity='N_cnn C K L d', ops=n_cnn * c * k * t * d),
        dict(model='FEG-DNN', structure='Feature + DNN', complexity='N_dnn d^2', ops=n * d * d),
        dict(model='Transformer', structure='Self-attention', complexity='N_layer L^2 d', ops=n * t * t * d),
        dict(model='Trans-GAN-MIL', structure='Transformer-MIL generator + CA-CNN discriminator',
             complexity='N_layer L^2 d + N_cnn C K L d', ops=attention + conv,
             exact_macs=mac_count_generator(config) + mac_count_discriminator(config)),
    ]
