from rfsf.common.errors import ConfigError
from .adam import adam_hat

OPTIMIZERS = ('adam',)


def _rename(kwargs, originals, new):
    for o, n in zip(originals, new):
        o = kwargs.pop(o, None)
        if o is not None:
            kwargs[n] = o


def create_optax_optim(name, learning_rate=None, **kwargs):
    """ Optimizer Factory

    Args:
        learning_rate (float): step size
        **kwargs: eps, beta1 and beta2 (renamed to the optax b1 / b2)

    'adam' is the epsilon-hat Adam used for both networks.
    """
    name = name.lower()
    if name not in OPTIMIZERS:
        raise ConfigError(f'Invalid optimizer name specified ({name}), expected one of {OPTIMIZERS}')
    opt_args = dict(learning_rate=learning_rate, **kwargs)
    _rename(opt_args, ('beta1', 'beta2'), ('b1', 'b2'))
    return adam_hat(**opt_args)
