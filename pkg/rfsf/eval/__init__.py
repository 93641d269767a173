from .ablation import ABLATION_VARIANTS, AblationResult, ablation_run, variant_configs
from .augmentation import augmentation_experiment
from .complexity import ComplexityReport, complexity_report, complexity_comparison, mac_count_generator,\
    mac_count_discriminator, conv_macs
from .evaluate import evaluate_head, evaluate_models, resolve_heads
from .explain import Explanation, explain, explain_bags
from .knn import knn_baseline, knn_predict
