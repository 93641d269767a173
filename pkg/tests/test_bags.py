import numpy as np
import pytest

from conftest import blob_bags, small_preprocess_config
from rfsf.common.errors import ConfigError, ContractError, FormatError
from rfsf.common.io import file_sha256
from rfsf.data import BagSet, FlightState, IQSignal, bags_from_signals, read_bags, split_bags, write_bags
from rfsf.data.bags import BAGS_MAGIC


def _signal(rng, n, state, source):
    return IQSignal(samples=rng.standard_normal(n) + 1j * rng.standard_normal(n), sample_rate_hz=1e6,
                    label=FlightState.of('SYNTH3', state), source=source)


class TestBagSet:

    def test_shapes(self):
        bags = blob_bags(5)
        assert len(bags) == 15
        assert (bags.bag_size, bags.instance_dim) == (4, 16)
        assert bags.class_counts().tolist() == [5, 5, 5]
        assert not bags.synthetic.any()

    def test_label_range(self):
        with pytest.raises(IndexError):
            BagSet(instances=np.zeros((2, 3, 4)), labels=[0, 2], num_classes=2)

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            BagSet(instances=np.zeros((2, 3, 4)), labels=[0], num_classes=2)

    def test_concat(self):
        a, b = blob_bags(2), blob_bags(1, seed=1)
        c = a.concat(b)
        assert len(c) == 9
        np.testing.assert_array_equal(c.instances[6:], b.instances)
        with pytest.raises(ContractError):
            a.concat(blob_bags(1, instance_dim=8))


class TestContainer:

    def test_round_trip_and_header(self, tmp_path):
        bags = blob_bags(3)
        bags.synthetic[:2] = True
        filename = str(tmp_path / 'b.rfsb')
        write_bags(filename, bags)
        raw = open(filename, 'rb').read()
        assert raw[:4] == BAGS_MAGIC
        assert len(raw) == 24 + 4 * 9 * 4 * 16 + 4 * 9 + 9
        back = read_bags(filename)
        np.testing.assert_array_equal(back.instances, bags.instances.astype(np.float32))
        np.testing.assert_array_equal(back.labels, bags.labels)
        np.testing.assert_array_equal(back.synthetic, bags.synthetic)
        assert back.num_classes == 3

    def test_identical_bytes(self, tmp_path):
        write_bags(str(tmp_path / 'a'), blob_bags(3))
        write_bags(str(tmp_path / 'b'), blob_bags(3))
        assert file_sha256(str(tmp_path / 'a')) == file_sha256(str(tmp_path / 'b'))

    def test_bad_magic(self, tmp_path):
        filename = tmp_path / 'b.rfsb'
        write_bags(str(filename), blob_bags(1))
        raw = bytearray(filename.read_bytes())
        raw[:4] = b'NOPE'
        filename.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match='magic'):
            read_bags(str(filename))

    def test_truncated(self, tmp_path):
        filename = tmp_path / 'b.rfsb'
        write_bags(str(filename), blob_bags(1))
        filename.write_bytes(filename.read_bytes()[:-3])
        with pytest.raises(FormatError):
            read_bags(str(filename))
        filename.write_bytes(b'RFSB')
        with pytest.raises(FormatError):
            read_bags(str(filename))


class TestFromSignals:

    def test_counts_and_short_signals(self, rng):
        config = small_preprocess_config()
        signals = [
            _signal(rng, 16 + 8 * 13, 'ON', 'a'),  # 14 windows, 3 bags
            _signal(rng, 20, 'HO', 'b'),  # too short
            _signal(rng, 16 + 8 * 7, 'FY', 'c'),  # 8 windows, 2 bags
        ]
        bag_set, reports = bags_from_signals(signals, config, num_classes=3, jobs=2)
        assert len(bag_set) == 5
        assert [r.n_bags for r in reports] == [3, 0, 2]
        assert reports[1].error and not reports[0].error
        assert bag_set.labels.tolist() == [0, 0, 0, 2, 2]
        assert bag_set.sources[3] == 'c@0'

    def test_all_short(self, rng):
        with pytest.raises(ContractError):
            bags_from_signals([_signal(rng, 20, 'ON', 'a')], small_preprocess_config(), num_classes=3)


class TestSplit:

    def test_stratified_and_disjoint(self):
        bags = blob_bags(20)
        for i in range(len(bags)):
            bags.sources[i] = f'bag{i}'
        train, test = split_bags(bags, 0.2, seed=7)
        assert len(train) == 48 and len(test) == 12
        assert test.class_counts().tolist() == [4, 4, 4]
        assert not set(train.sources) & set(test.sources)

    def test_deterministic(self):
        bags = blob_bags(10)
        a, _ = split_bags(bags, 0.3, seed=1)
        b, _ = split_bags(bags, 0.3, seed=1)
        np.testing.assert_array_equal(a.instances, b.instances)

    def test_fraction_range(self):
        with pytest.raises(ConfigError):
            split_bags(blob_bags(4), 1.0)
