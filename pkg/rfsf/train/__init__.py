from .augment import augment_dataset, allocate_counts
from .cgan import GanState, discriminator_loss, generator_loss, disc_step, gen_step, train_cgan, heldout_accuracy,\
    HISTORY_COLUMNS
from .classifier import train_classifier
from .train_state import ModelState, History, create_model_state
