import jax.numpy as jnp
import numpy as np
import optax
import pytest

from rfsf.common.errors import ConfigError
from rfsf.common.optim import create_optax_optim, finite_update, scale_by_adam_hat
from rfsf.common.tensor_core import adam_step, init_adam_state


def test_factory_names():
    assert isinstance(create_optax_optim('Adam', learning_rate=0.1), optax.GradientTransformation)
    with pytest.raises(ConfigError, match='Invalid optimizer'):
        create_optax_optim('sgd', learning_rate=0.1)


def test_factory_adam_matches_adam_step(rng):
    params = dict(w=jnp.asarray(rng.standard_normal((3, 2))))
    tx = create_optax_optim('adam', learning_rate=0.01, beta1=0.9, beta2=0.999, eps=1e-8)
    opt_state = tx.init(params)
    state = init_adam_state(params)
    p_tx, p_step = params, params
    for _ in range(5):
        grads = dict(w=jnp.asarray(rng.standard_normal((3, 2))))
        p_tx, opt_state, _ = finite_update(tx, grads, opt_state, p_tx)
        p_step, state, _ = adam_step(p_step, grads, state, lr=0.01)
    np.testing.assert_allclose(p_tx['w'], p_step['w'], rtol=0, atol=1e-15)


def test_epsilon_hat_differs_from_optax():
    p = jnp.array(1.)
    hat, _ = scale_by_adam_hat().update(jnp.array(1.), scale_by_adam_hat().init(p))
    stock, _ = optax.scale_by_adam().update(jnp.array(1.), optax.scale_by_adam().init(p))
    assert float(hat) == pytest.approx(1 / (1 + 1e-8 / np.sqrt(1e-3)), abs=1e-15)
    assert float(stock) == pytest.approx(1 / (1 + 1e-8), abs=1e-15)


def test_finite_update_rejects_inf():
    params = jnp.array([1., 1.])
    tx = create_optax_optim('adam', learning_rate=0.5)
    opt_state = tx.init(params)
    new, _, is_fin = finite_update(tx, jnp.array([jnp.inf, 0.]), opt_state, params)
    assert not bool(is_fin)
    np.testing.assert_array_equal(new, params)
