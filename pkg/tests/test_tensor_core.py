import math

import jax
import jax.numpy as jnp
import numpy as np
import pytest

from rfsf.common import tensor_core as tc
from rfsf.common.errors import ContractError, DimensionError


class TestMatmul:

    def test_identity(self, rng):
        a = rng.standard_normal((3, 5))
        np.testing.assert_array_equal(tc.matmul(a, np.eye(5)), a)

    def test_hand_product(self):
        np.testing.assert_array_equal(tc.matmul(jnp.array([[1., 2.], [3., 4.]]), jnp.array([[1.], [1.]])),
                                      [[3.], [7.]])

    def test_zeros(self, rng):
        out = tc.matmul(np.zeros((2, 3)), rng.standard_normal((3, 4)))
        assert out.shape == (2, 4)
        assert not np.any(out)

    def test_shape_mismatch_names_shapes(self):
        with pytest.raises(DimensionError, match=r'\(2, 3\).*\(4, 2\)'):
            tc.matmul(np.zeros((2, 3)), np.zeros((4, 2)))


class TestSoftmax:

    def test_uniform(self):
        np.testing.assert_allclose(tc.softmax_stable(jnp.zeros(3)), np.full(3, 1 / 3), atol=1e-15)

    def test_shift_invariance(self, rng):
        x = rng.standard_normal((5, 7))
        np.testing.assert_allclose(tc.softmax_stable(x + 123.4), tc.softmax_stable(x), atol=1e-12)

    def test_log_values(self):
        x = jnp.log(jnp.array([1., 2., 3.]))
        np.testing.assert_allclose(tc.softmax_stable(x), [1 / 6, 2 / 6, 3 / 6], atol=1e-15)

    def test_sums_to_one(self, rng):
        for axis in (0, 1, -1):
            p = tc.softmax_stable(rng.standard_normal((6, 9)) * 30, axis=axis)
            assert np.all(np.asarray(p) >= 0)
            np.testing.assert_allclose(np.sum(p, axis=axis), 1., atol=1e-12)

    def test_large_logits_finite(self):
        p = tc.softmax_stable(jnp.array([1e308, 0., -1e308]))
        assert np.all(np.isfinite(p))

    def test_bad_axis(self):
        with pytest.raises(ContractError):
            tc.softmax_stable(jnp.zeros((2, 2)), axis=2)


class TestCrossEntropy:

    def test_confident(self):
        logits = jnp.array([[20., 0., 0.], [0., 25., 0.]])
        assert float(tc.cross_entropy(logits, jnp.array([0, 1]))) <= 1e-6

    def test_uniform_is_log_k(self):
        assert float(tc.cross_entropy(jnp.zeros((4, 5)), jnp.array([0, 1, 2, 4]))) == pytest.approx(math.log(5))

    def test_hand_value(self):
        assert float(tc.cross_entropy(jnp.array([[2., 1., 0.]]), jnp.array([0]))) == pytest.approx(
            0.40760596444, abs=1e-10)

    def test_label_out_of_range(self):
        with pytest.raises(IndexError):
            tc.cross_entropy(jnp.zeros((1, 3)), jnp.array([3]))

    def test_bce_zero_logits(self):
        assert float(tc.bce_with_logits(jnp.zeros(6), jnp.array([0, 1, 0, 1, 1, 0]))) == pytest.approx(math.log(2))


class TestBackward:

    def test_sum_grad_ones(self, rng):
        x = rng.standard_normal((2, 3, 4))
        loss, g = tc.backward(lambda p: jnp.sum(p), x)
        np.testing.assert_array_equal(g, np.ones_like(x))
        assert float(loss) == pytest.approx(x.sum())

    def test_square(self):
        _, g = tc.backward(lambda p: jnp.sum(p * p), jnp.array(3.))
        assert float(g) == 6.

    def test_non_scalar(self):
        with pytest.raises(ContractError):
            tc.backward(lambda p: p * 2, jnp.ones(3))

    def test_accumulate_sums(self, rng):
        params = dict(w=rng.standard_normal((3, 2)), b=rng.standard_normal(2))
        f = lambda p: jnp.sum(jnp.tanh(p['w']) @ p['b'])
        _, g = tc.backward(f, params)
        acc = tc.accumulate_grads(tc.zero_grad(params), g)
        acc = tc.accumulate_grads(acc, g)
        jax.tree_util.tree_map(lambda a, b: np.testing.assert_allclose(a, 2 * b), acc, g)

    def test_zero_grad(self, rng):
        zeros = tc.zero_grad(dict(w=rng.standard_normal((3, 2))))
        assert not np.any(zeros['w'])

    def test_fresh_graph_equal(self, rng):
        x = rng.standard_normal(5)
        f = lambda p: jnp.sum(jax.nn.sigmoid(p) ** 2)
        _, g1 = tc.backward(f, x)
        _, g2 = tc.backward(f, x)
        np.testing.assert_array_equal(g1, g2)


def _primitive_cases(rng):
    k = rng.standard_normal((3, 2, 3))
    w = rng.standard_normal((4, 3))
    table = rng.standard_normal((5, 3))
    ids = jnp.array([0, 3, 3, 1])
    labels = jnp.array([1, 0, 2])
    targets = jnp.array([1., 0., 1., 0.])
    return [
        ('matmul', lambda x: jnp.sum(tc.matmul(x[0], x[1]) ** 2), (rng.standard_normal((2, 4)), w)),
        ('add', lambda x: jnp.sum(jnp.sin(tc.add(x[0], x[1]))), (rng.standard_normal(4), rng.standard_normal(4))),
        ('mul', lambda x: jnp.sum(tc.mul(x[0], x[1]) ** 2), (rng.standard_normal(4), rng.standard_normal(4))),
        ('relu', lambda x: jnp.sum(tc.relu(x) * jnp.arange(1., 7.)), rng.standard_normal(6)),
        ('sigmoid', lambda x: jnp.sum(tc.sigmoid(x) ** 2), rng.standard_normal(6)),
        ('tanh', lambda x: jnp.sum(tc.tanh(x) * jnp.arange(1., 7.)), rng.standard_normal(6)),
        ('layer_norm', lambda x: jnp.sum(tc.layer_norm(x[0], x[1], x[2]) * jnp.arange(1., 6.)),
         (rng.standard_normal((2, 5)), rng.standard_normal(5), rng.standard_normal(5))),
        ('conv1d', lambda x: jnp.sum(tc.conv1d(x[0], x[1], stride=2, padding=1) ** 2),
         (rng.standard_normal((1, 7, 2)), k)),
        ('reduce_mean', lambda x: jnp.sum(tc.reduce_mean(x, axis=0) ** 2), rng.standard_normal((3, 4))),
        ('reduce_max', lambda x: jnp.sum(tc.reduce_max(x, axis=1) ** 2), rng.standard_normal((3, 4))),
        ('concat', lambda x: jnp.sum(tc.concat([x[0], x[1]]) * jnp.arange(1., 6.)),
         (rng.standard_normal(2), rng.standard_normal(3))),
        ('embedding', lambda x: jnp.sum(tc.embedding(x, ids) ** 2), table),
        ('softmax_stable', lambda x: jnp.sum(tc.softmax_stable(x) * jnp.arange(1., 5.)), rng.standard_normal(4)),
        ('log_softmax', lambda x: jnp.sum(tc.log_softmax(x) * jnp.arange(1., 5.)), rng.standard_normal(4)),
        ('cross_entropy', lambda x: tc.cross_entropy(x, labels), rng.standard_normal((3, 3))),
        ('bce_with_logits', lambda x: tc.bce_with_logits(x, targets), rng.standard_normal(4)),
    ]


class TestGradCheck:

    def test_sum_of_squares(self, rng):
        assert tc.grad_check(lambda x: jnp.sum(x ** 2), rng.standard_normal(10)) <= 1e-8

    def test_constant(self, rng):
        assert tc.grad_check(lambda x: jnp.float64(3.), rng.standard_normal(4)) == 0.

    def test_step_range(self):
        with pytest.raises(ContractError):
            tc.grad_check(lambda x: jnp.sum(x), jnp.ones(2), h=1e-3)

    @pytest.mark.parametrize('name', [c[0] for c in _primitive_cases(np.random.default_rng(0))])
    def test_primitive(self, name):
        for trial in range(20):
            cases = dict((c[0], c[1:]) for c in _primitive_cases(np.random.default_rng(trial)))
            f, x = cases[name]
            err = tc.grad_check(f, x)
            assert err <= 1e-6, f'{name} trial {trial}: {err}'


class TestAdam:

    def test_single_step(self):
        p = jnp.array(1.)
        state = tc.init_adam_state(p)
        p, state, is_fin = tc.adam_step(p, jnp.array(1.), state, lr=0.1)
        assert bool(is_fin)
        assert float(p) == pytest.approx(0.9000000316, abs=1e-10)
        assert int(state.count) == 1

    def test_zero_grad_no_move(self, rng):
        params = dict(w=rng.standard_normal((2, 2)))
        state = tc.init_adam_state(params)
        new, state, _ = tc.adam_step(params, tc.zero_grad(params), state, lr=0.01)
        np.testing.assert_array_equal(new['w'], params['w'])
        assert not np.any(state.mu['w']) and not np.any(state.nu['w'])

    def test_identical_params_identical_updates(self):
        params = jnp.array([0.5, 0.5])
        new, _, _ = tc.adam_step(params, jnp.array([0.3, 0.3]), tc.init_adam_state(params), lr=0.01)
        assert float(new[0]) == float(new[1])

    def test_non_finite_rejected(self):
        params = jnp.array([1., 2.])
        state = tc.init_adam_state(params)
        new, new_state, is_fin = tc.adam_step(params, jnp.array([jnp.nan, 1.]), state, lr=0.1)
        assert not bool(is_fin)
        np.testing.assert_array_equal(new, params)
        assert int(new_state.count) == 0

    def test_bad_lr(self):
        with pytest.raises(ContractError):
            tc.adam_step(jnp.ones(1), jnp.ones(1), tc.init_adam_state(jnp.ones(1)), lr=0.)

    def test_structure_mismatch(self):
        params = dict(a=jnp.ones(1))
        with pytest.raises(DimensionError):
            tc.adam_step(params, dict(b=jnp.ones(1)), tc.init_adam_state(params), lr=0.1)

    def test_second_moment_non_negative(self, rng):
        params = jnp.asarray(rng.standard_normal(5))
        state = tc.init_adam_state(params)
        for _ in range(3):
            params, state, _ = tc.adam_step(params, jnp.asarray(rng.standard_normal(5)), state, lr=0.01)
        assert np.all(np.asarray(state.nu) >= 0)
