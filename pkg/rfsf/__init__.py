import jax

# all model math runs in 64-bit, must be set before any array is created
jax.config.update('jax_enable_x64', True)

__version__ = '0.1.0'
