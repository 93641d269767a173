from .adam import AdamState, scale_by_adam_hat, adam_hat
from .helpers import finite_update, tree_all_finite
from .optim_factory import create_optax_optim
