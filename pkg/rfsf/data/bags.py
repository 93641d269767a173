""" In-memory bag sets and the binary bag container

Container layout, all little-endian:

    offset  type     field
    0       char[4]  magic 'RFSB'
    4       uint16   version (1)
    6       uint16   reserved (0)
    8       uint32   t, instances per bag
    12      uint32   d, instance dimension
    16      uint32   count, number of bags
    20      uint32   num_classes
    24      float32  instances, count * t * d, row-major
    ...     int32    labels, count
    ...     uint8    synthetic flags, count
"""
import concurrent.futures
import dataclasses
import logging
from typing import List, Optional

import numpy as np
from sklearn.model_selection import train_test_split

from rfsf.common.errors import ConfigError, ContractError, FormatError
from .preprocess import make_bags

__all__ = ['BAGS_MAGIC', 'BAGS_VERSION', 'BagSet', 'BagReport', 'bags_from_signals', 'write_bags', 'read_bags',
           'split_bags']

_logger = logging.getLogger(__name__)

BAGS_MAGIC = b'RFSB'
BAGS_VERSION = 1

_HEADER = np.dtype([
    ('magic', 'S4'),
    ('version', '<u2'),
    ('reserved', '<u2'),
    ('t', '<u4'),
    ('d', '<u4'),
    ('count', '<u4'),
    ('num_classes', '<u4'),
])


@dataclasses.dataclass
class BagSet:
    instances: np.ndarray  # [n, t, d] float64
    labels: np.ndarray  # [n] int
    num_classes: int
    synthetic: Optional[np.ndarray] = None  # [n] bool provenance
    sources: Optional[List[str]] = None
    class_names: Optional[List[str]] = None

    def __post_init__(self):
        self.instances = np.asarray(self.instances, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.instances.ndim != 3 or self.instances.shape[0] != self.labels.shape[0]:
            raise ContractError(f'bag instances {self.instances.shape} do not match labels {self.labels.shape}')
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise IndexError(f'bag label out of range [0, {self.num_classes})')
        if self.synthetic is None:
            self.synthetic = np.zeros(len(self), dtype=bool)
        self.synthetic = np.asarray(self.synthetic, dtype=bool)
        if self.sources is None:
            self.sources = [''] * len(self)

    def __len__(self):
        return self.labels.shape[0]

    @property
    def bag_size(self):
        return self.instances.shape[1]

    @property
    def instance_dim(self):
        return self.instances.shape[2]

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.num_classes)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return BagSet(
            instances=self.instances[idx], labels=self.labels[idx], num_classes=self.num_classes,
            synthetic=self.synthetic[idx], sources=[self.sources[i] for i in idx], class_names=self.class_names)

    def concat(self, other: 'BagSet'):
        if other.instances.shape[1:] != self.instances.shape[1:] or other.num_classes != self.num_classes:
            raise ContractError('cannot concatenate bag sets of different shape or class count')
        return BagSet(
            instances=np.concatenate([self.instances, other.instances]),
            labels=np.concatenate([self.labels, other.labels]),
            num_classes=self.num_classes,
            synthetic=np.concatenate([self.synthetic, other.synthetic]),
            sources=self.sources + other.sources,
            class_names=self.class_names)

    @classmethod
    def from_bags(cls, bags, num_classes, class_names=None):
        if not bags:
            raise ContractError('no bags')
        return cls(
            instances=np.stack([b.instances for b in bags]),
            labels=np.array([b.label.index for b in bags], dtype=np.int64),
            num_classes=num_classes,
            sources=[f'{b.source}@{b.first_window}' for b in bags],
            class_names=class_names)


@dataclasses.dataclass
class BagReport:
    source: str
    n_samples: int
    n_bags: int
    error: str = ''


def bags_from_signals(signals, config, num_classes=None, class_names=None, jobs=1):
    """Preprocess every signal into bags; signals too short for one bag are reported and skipped.

    Returns:
        (BagSet, list of BagReport in signal order)
    """

    def _one(s):
        try:
            return make_bags(s, config), None
        except ContractError as e:
            return [], str(e)

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(_one, signals))
    else:
        results = [_one(s) for s in signals]

    bags = []
    reports = []
    for s, (b, err) in zip(signals, results):
        if err:
            _logger.warning(f'Skipping {s.source}: {err}')
        bags.extend(b)
        reports.append(BagReport(source=s.source, n_samples=len(s), n_bags=len(b), error=err or ''))
    if num_classes is None:
        num_classes = max(s.label.index for s in signals) + 1
    if not bags:
        raise ContractError('no signal produced a bag')
    return BagSet.from_bags(bags, num_classes, class_names=class_names), reports


def write_bags(filename, bag_set: BagSet):
    header = np.zeros((), dtype=_HEADER)
    header['magic'] = BAGS_MAGIC
    header['version'] = BAGS_VERSION
    header['t'] = bag_set.bag_size
    header['d'] = bag_set.instance_dim
    header['count'] = len(bag_set)
    header['num_classes'] = bag_set.num_classes
    with open(filename, 'wb') as f:
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(bag_set.instances, dtype='<f4').tobytes())
        f.write(bag_set.labels.astype('<i4').tobytes())
        f.write(bag_set.synthetic.astype('u1').tobytes())


def read_bags(filename) -> BagSet:
    with open(filename, 'rb') as f:
        data = f.read()
    if len(data) < _HEADER.itemsize:
        raise FormatError(f'{filename}: {len(data)} bytes is too short for a bag container header')
    header = np.frombuffer(data[:_HEADER.itemsize], dtype=_HEADER)[0]
    if header['magic'] != BAGS_MAGIC:
        raise FormatError(f'{filename}: bad magic {header["magic"]!r}')
    if header['version'] != BAGS_VERSION:
        raise FormatError(f'{filename}: unsupported bag container version {header["version"]}')
    t, d, count = int(header['t']), int(header['d']), int(header['count'])
    n_floats = count * t * d
    expected = _HEADER.itemsize + 4 * n_floats + 4 * count + count
    if len(data) != expected:
        raise FormatError(f'{filename}: expected {expected} bytes for {count} bags of {t}x{d}, got {len(data)}')
    offset = _HEADER.itemsize
    instances = np.frombuffer(data, dtype='<f4', count=n_floats, offset=offset).reshape(count, t, d)
    offset += 4 * n_floats
    labels = np.frombuffer(data, dtype='<i4', count=count, offset=offset)
    offset += 4 * count
    synthetic = np.frombuffer(data, dtype='u1', count=count, offset=offset)
    return BagSet(
        instances=instances.astype(np.float64), labels=labels.astype(np.int64),
        num_classes=int(header['num_classes']), synthetic=synthetic.astype(bool))


def split_bags(bag_set: BagSet, test_fraction, seed=0):
    """Stratified (train, test) split."""
    if not 0 < test_fraction < 1:
        raise ConfigError(f'test fraction must be in (0, 1), got {test_fraction}')
    idx = np.arange(len(bag_set))
    train_idx, test_idx = train_test_split(
        idx, test_size=test_fraction, random_state=seed, stratify=bag_set.labels)
    return bag_set.subset(np.sort(train_idx)), bag_set.subset(np.sort(test_idx))
