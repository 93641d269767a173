import jax
import jax.numpy as jnp
import numpy as np
import pytest
from flax import traverse_util

from conftest import small_model_config
from rfsf.common.config import default_model_config, overlay
from rfsf.common.errors import ConfigError, ContractError, DimensionError
from rfsf.common.loss import bag_nll, bce_with_logits, cross_entropy
from rfsf.common.tensor_core import grad_check
from rfsf.linen import (
    ChannelAttention, CnnGenerator, Discriminator, MILConjunctivePool, MeanPoolHead, conjunctive_pool,
    create_discriminator, create_generator, create_model, discriminator_param_count, generator_param_count,
    init_discriminator, init_generator, match_cnn_base_channels, param_count, positional_encoding)
from rfsf.linen.helpers import cnn_generator_param_count, transformer_generator_param_count
from rfsf.linen.layers import MultiHeadSelfAttention, get_act_fn


class TestPositionalEncoding:

    def test_values(self):
        pe = positional_encoding(5, 8)
        np.testing.assert_array_equal(pe[0], [0., 1.] * 4)
        assert pe[1, 0] == pytest.approx(np.sin(1.))
        assert pe[1, 1] == pytest.approx(np.cos(1.))
        assert pe[3, 2] == pytest.approx(np.sin(3. / 10000 ** (2 / 8)))
        assert pe[3, 7] == pytest.approx(np.cos(3. / 10000 ** (6 / 8)))

    def test_odd_width(self):
        with pytest.raises(ContractError):
            positional_encoding(4, 7)


class TestAttention:

    def test_hand_computed(self, rng):
        t, d, heads = 5, 8, 2
        x = jnp.asarray(rng.standard_normal((2, t, d)))
        mhsa = MultiHeadSelfAttention(num_heads=heads)
        params = mhsa.init(jax.random.PRNGKey(0), x)['params']
        out = np.asarray(mhsa.apply({'params': params}, x))

        def proj(name, y):
            return y @ np.asarray(params[name]['kernel']) + np.asarray(params[name]['bias'])

        xn = np.asarray(x)
        q, k, v = (proj(n, xn).reshape(2, t, heads, d // heads) for n in ('query', 'key', 'value'))
        expected = np.zeros((2, t, heads, d // heads))
        for b in range(2):
            for h in range(heads):
                s = q[b, :, h] @ k[b, :, h].T / np.sqrt(d // heads)
                a = np.exp(s - s.max(axis=-1, keepdims=True))
                a /= a.sum(axis=-1, keepdims=True)
                expected[b, :, h] = a @ v[b, :, h]
        expected = proj('out', expected.reshape(2, t, d))
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_attention_rows_sum_to_one(self, rng):
        x = jnp.asarray(rng.standard_normal((3, 6, 8)))
        mhsa = MultiHeadSelfAttention(num_heads=4)
        params = mhsa.init(jax.random.PRNGKey(1), x)['params']
        _, state = mhsa.apply({'params': params}, x, mutable=['intermediates'])
        attn = np.asarray(state['intermediates']['attention'][0])
        assert attn.shape == (3, 4, 6, 6)
        np.testing.assert_allclose(attn.sum(axis=-1), 1., atol=1e-12)

    def test_head_divisibility(self):
        with pytest.raises(ConfigError):
            MultiHeadSelfAttention(num_heads=3).init(jax.random.PRNGKey(0), jnp.zeros((1, 2, 8)))


class TestMILPool:

    def test_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            b, t, k = int(rng.integers(1, 4)), int(rng.integers(1, 65)), int(rng.integers(2, 9))
            a = rng.uniform(size=(b, t))
            y = rng.dirichlet(np.ones(k), size=(b, t))
            out = conjunctive_pool(jnp.asarray(a), jnp.asarray(y))
            expected = np.zeros((b, k))
            for i in range(b):
                for c in range(k):
                    acc = 0.
                    for j in range(t):
                        acc += a[i, j] * y[i, j, c]
                    expected[i, c] = acc / t
            np.testing.assert_allclose(out.bag_probs, expected, rtol=0, atol=1e-12)

    def test_module_contracts(self, rng):
        z = jnp.asarray(rng.standard_normal((4, 7, 8)))
        pool = MILConjunctivePool(num_classes=3)
        params = pool.init(jax.random.PRNGKey(0), z)['params']
        out = pool.apply({'params': params}, z)
        assert np.all((np.asarray(out.attention) > 0) & (np.asarray(out.attention) < 1))
        np.testing.assert_allclose(out.instance_probs.sum(-1), 1., atol=1e-12)
        np.testing.assert_allclose(out.saliency.mean(axis=1), out.bag_probs, atol=1e-15)
        assert np.all(np.asarray(out.bag_probs).sum(-1) <= 1 + 1e-12)

    def test_unit_attention_is_mean(self, rng):
        y = rng.dirichlet(np.ones(3), size=(2, 5))
        out = conjunctive_pool(jnp.ones((2, 5)), jnp.asarray(y))
        np.testing.assert_allclose(out.bag_probs, y.mean(axis=1), atol=1e-15)

    def test_mean_pool_head(self, rng):
        z = jnp.asarray(rng.standard_normal((2, 5, 8)))
        head = MeanPoolHead(num_classes=3)
        params = head.init(jax.random.PRNGKey(0), z)['params']
        out = head.apply({'params': params}, z)
        np.testing.assert_array_equal(out.attention, np.ones((2, 5)))
        np.testing.assert_allclose(out.bag_probs.sum(-1), 1., atol=1e-12)


class TestChannelAttention:

    def test_weights_sum_to_one(self, rng):
        x = jnp.asarray(rng.standard_normal((1000, 9, 8)) * 5)
        ca = ChannelAttention('learned')
        params = ca.init(jax.random.PRNGKey(0), x)['params']
        w, out = ca.apply({'params': params}, x)
        np.testing.assert_allclose(np.asarray(w).sum(-1), 1., atol=1e-12)
        np.testing.assert_allclose(out, np.asarray(x) * 8 * np.asarray(w)[:, None, :], atol=1e-12)

    def test_uniform_matches_none_bit_for_bit(self, rng):
        config = small_model_config()
        bags = jnp.asarray(rng.standard_normal((5, 4, 16)))
        uniform = Discriminator(num_classes=3, channels=(4, 8), channel_attention='uniform')
        plain = Discriminator(num_classes=3, channels=(4, 8), channel_attention='none')
        params = init_discriminator(plain, config, jax.random.PRNGKey(0))
        a = uniform.apply({'params': params}, bags)
        b = plain.apply({'params': params}, bags)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])


    def test_symmetric_init_gives_uniform_weights(self, rng):
        x = jnp.asarray(np.repeat(rng.standard_normal((3, 7, 1)), 5, axis=-1))
        ca = ChannelAttention('learned')
        params = ca.init(jax.random.PRNGKey(0), x)['params']
        params = jax.tree_util.tree_map(lambda p: jnp.full_like(p, 0.25), params)
        w, out = ca.apply({'params': params}, x)
        np.testing.assert_allclose(w, np.full((3, 5), 0.2), atol=1e-15)
        np.testing.assert_allclose(out, x, atol=1e-12)


class TestParamCounts:

    def test_default_transformer(self):
        config = default_model_config()
        assert transformer_generator_param_count(config) == 254596
        gen = create_generator(config)
        assert param_count(init_generator(gen, config, jax.random.PRNGKey(0))) == 254596

    @pytest.mark.parametrize('overrides', [
        dict(), dict(use_mil=False), dict(n_layers=3, d_ff=0), dict(generator_type='cnn'),
        dict(generator_type='cnn', cnn_gen_base_channels=5), dict(channel_attention='none'),
    ])
    def test_analytic_matches_init(self, overrides):
        config = small_model_config(**overrides)
        _, _, gen_params, disc_params = create_model(config, jax.random.PRNGKey(0))
        assert param_count(gen_params) == generator_param_count(config)
        assert param_count(disc_params) == discriminator_param_count(config)

    def test_cnn_matched_within_ten_percent(self):
        config = overlay(default_model_config(), dict(generator_type='cnn'), 'model')
        target = transformer_generator_param_count(config)
        count = cnn_generator_param_count(config, match_cnn_base_channels(config))
        assert abs(count - target) <= 0.1 * target

    def test_mil_head_adds_attention_scorer(self):
        with_mil = small_model_config()
        without = small_model_config(use_mil=False)
        assert generator_param_count(with_mil) - generator_param_count(without) == with_mil.d_model + 1


class TestGenerators:

    def test_shapes(self, rng):
        config = small_model_config()
        gen, disc, gen_params, disc_params = create_model(config, jax.random.PRNGKey(0))
        z = jnp.asarray(rng.standard_normal((3, 4)))
        labels = jnp.array([0, 1, 2])
        bag, mil = gen.apply({'params': gen_params}, z, labels)
        assert bag.shape == (3, 4, 16)
        assert mil.bag_probs.shape == (3, 3) and mil.saliency.shape == (3, 4, 3)
        mil = gen.apply({'params': gen_params}, bag, method=type(gen).classify)
        assert mil.attention.shape == (3, 4)
        source, logits = disc.apply({'params': disc_params}, bag)
        assert source.shape == (3,) and logits.shape == (3, 3)

    def test_generation_independent_of_pool(self, rng):
        full = small_model_config()
        gen = create_generator(full)
        params = init_generator(gen, full, jax.random.PRNGKey(0))
        no_mil = small_model_config(use_mil=False)
        flat = traverse_util.flatten_dict(params, sep='/')
        stripped = traverse_util.unflatten_dict(
            {k: v for k, v in flat.items() if not k.startswith('pool/attention')}, sep='/')
        z = jnp.asarray(rng.standard_normal((2, 4)))
        labels = jnp.array([1, 2])
        a, _ = gen.apply({'params': params}, z, labels)
        b, _ = create_generator(no_mil).apply({'params': stripped}, z, labels)
        np.testing.assert_array_equal(a, b)

    def test_label_changes_bag(self, rng):
        config = small_model_config()
        gen = create_generator(config)
        params = init_generator(gen, config, jax.random.PRNGKey(0))
        z = jnp.asarray(rng.standard_normal((1, 4)))
        a, _ = gen.apply({'params': params}, z, jnp.array([0]))
        b, _ = gen.apply({'params': params}, z, jnp.array([1]))
        assert not np.allclose(a, b)

    def test_cnn_generator(self, rng):
        config = small_model_config(generator_type='cnn')
        gen = create_generator(config)
        assert isinstance(gen, CnnGenerator) and not hasattr(gen, 'classify')
        params = init_generator(gen, config, jax.random.PRNGKey(0))
        bag, mil = gen.apply({'params': params}, jnp.ones((2, 4)), jnp.array([0, 1]))
        assert bag.shape == (2, 4, 16) and mil is None

    def test_cnn_length_divisibility(self):
        gen = CnnGenerator(num_classes=2, bag_size=3, instance_dim=5, noise_dim=2, channels=(4, 4))
        with pytest.raises(ConfigError):
            gen.init(jax.random.PRNGKey(0), jnp.ones((1, 2)), jnp.array([0]))

    def test_discriminator_rejects_wrong_length(self, model_config):
        disc = create_discriminator(model_config)
        params = init_discriminator(disc, model_config, jax.random.PRNGKey(0))
        with pytest.raises(DimensionError, match='conv0'):
            disc.apply({'params': params}, jnp.zeros((2, 4, 12)))
        with pytest.raises(DimensionError, match='conv0'):
            disc.apply({'params': params}, jnp.zeros((2, 5, 16)))

    def test_channel_weights_sown(self, rng):
        config = small_model_config()
        disc = create_discriminator(config)
        params = init_discriminator(disc, config, jax.random.PRNGKey(0))
        _, state = disc.apply({'params': params}, jnp.asarray(rng.standard_normal((2, 4, 16))),
                              mutable=['intermediates'])
        w = np.asarray(state['intermediates']['channel_weights'][0])
        assert w.shape == (2, 8)
        np.testing.assert_allclose(w.sum(-1), 1., atol=1e-12)


class TestCompositeGradients:
    """Finite-difference checks of whole networks at t=4, d=8."""

    def test_generator_generate_path(self, rng):
        config = small_model_config()
        gen = create_generator(config)
        params = init_generator(gen, config, jax.random.PRNGKey(2))
        z = jnp.asarray(rng.standard_normal((2, 4)))
        labels = jnp.array([0, 2])

        def loss(p):
            bag, mil = gen.apply({'params': p}, z, labels)
            return jnp.mean(bag ** 2) + bag_nll(mil.bag_probs, labels)

        assert grad_check(loss, params) <= 1e-4

    def test_generator_classify_path(self, rng):
        config = small_model_config()
        gen = create_generator(config)
        params = init_generator(gen, config, jax.random.PRNGKey(3))
        bags = jnp.asarray(rng.standard_normal((2, 4, 16)))
        labels = jnp.array([1, 0])

        def loss(p):
            mil = gen.apply({'params': p}, bags, method=type(gen).classify)
            return cross_entropy(jnp.log(mil.bag_probs), labels)

        assert grad_check(loss, params) <= 1e-4

    def test_discriminator(self, rng):
        config = small_model_config()
        disc = create_discriminator(config)
        params = init_discriminator(disc, config, jax.random.PRNGKey(4))
        bags = jnp.asarray(rng.standard_normal((3, 4, 16)))
        labels = jnp.array([0, 1, 2])

        def loss(p):
            source, logits = disc.apply({'params': p}, bags)
            return bce_with_logits(source, jnp.ones_like(source)) + cross_entropy(logits, labels)

        assert grad_check(loss, params) <= 1e-4


def test_get_act_fn():
    x = jnp.array([-1., 0., 2.])
    np.testing.assert_array_equal(get_act_fn('ReLU')(x), [0., 0., 2.])
    np.testing.assert_allclose(get_act_fn('tanh')(x), np.tanh([-1., 0., 2.]))
    with pytest.raises(ConfigError, match='Unknown activation'):
        get_act_fn('swish')
