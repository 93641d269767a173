import jax
import numpy as np
import pytest

import rfsf  # noqa: F401, enables x64
from rfsf.common.config import default_model_config, default_preprocess_config, default_train_config, overlay
from rfsf.data import BagSet

jax.config.update('jax_enable_x64', True)


def small_model_config(**overrides):
    """t=4, d=8 model, small enough for finite-difference checks."""
    base = dict(
        n_layers=1, n_heads=2, d_model=8, d_ff=16, bag_size=4, instance_dim=16, noise_dim=4, num_classes=3,
        disc_channels=(4, 8), cnn_gen_channels=(4, 4), kernel_size=3)
    base.update(overrides)
    return overlay(default_model_config(), base, 'model')


def small_train_config(**overrides):
    base = dict(epochs=2, batch_size=8, eval_batch_size=16, seed=3)
    base.update(overrides)
    return overlay(default_train_config(), base, 'train')


def small_preprocess_config(**overrides):
    base = dict(window_len=16, stride=8, fft_len=16, n_bands=4, bag_size=4)
    base.update(overrides)
    return overlay(default_preprocess_config(), base, 'preprocess')


def blob_bags(n_per_class, num_classes=3, bag_size=4, instance_dim=16, spread=0.3, seed=0):
    """Separable bags: every instance of class c is centred on a class specific random mean."""
    rng = np.random.default_rng(seed)
    means = rng.normal(0., 2., size=(num_classes, instance_dim))
    labels = np.repeat(np.arange(num_classes), n_per_class)
    instances = means[labels][:, None, :] + spread * rng.standard_normal((labels.size, bag_size, instance_dim))
    order = rng.permutation(labels.size)
    return BagSet(
        instances=instances[order], labels=labels[order], num_classes=num_classes,
        class_names=[f'C{i}' for i in range(num_classes)])


def planted_bags(n, planted=None, num_classes=3, bag_size=4, instance_dim=16, amplitude=3., seed=0):
    """Balanced bags of unit noise where one instance per bag carries its class pattern.

    planted=None puts the pattern at a random instance of each bag.
    """
    rng = np.random.default_rng(seed)
    patterns = np.random.default_rng(99).normal(0., 1., size=(num_classes, instance_dim))
    labels = np.arange(n) % num_classes
    instances = rng.standard_normal((n, bag_size, instance_dim))
    where = rng.integers(0, bag_size, n) if planted is None else np.full(n, planted)
    instances[np.arange(n), where] += amplitude * patterns[labels]
    return BagSet(instances=instances, labels=labels, num_classes=num_classes)


@pytest.fixture
def model_config():
    return small_model_config()


@pytest.fixture
def train_config():
    return small_train_config()


@pytest.fixture
def preprocess_config():
    return small_preprocess_config()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
