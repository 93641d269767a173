from .blocks_linen import MILOutput, TransformerBlock, MILConjunctivePool, MeanPoolHead, ChannelAttention,\
    conjunctive_pool, positional_encoding
from .discriminator_linen import Discriminator
from .generator_linen import TransformerMILGenerator, CnnGenerator
from .helpers import create_model, create_generator, create_discriminator, init_generator, init_discriminator,\
    generator_param_count, discriminator_param_count, param_count, match_cnn_base_channels, count_macs, MacCounter,\
    save_models, load_model, load_models, GENERATOR_CKPT, DISCRIMINATOR_CKPT
from .predict import make_disc_apply, make_classify_apply, batched_apply, predict_disc, predict_mil
