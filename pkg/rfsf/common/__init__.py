from .config import default_model_config, default_train_config, default_preprocess_config, default_synth_config,\
    load_config, overlay, model_config_from_dict, ff_features
from .constants import SPEED_OF_LIGHT, LABEL_SETS, get_label_set, list_label_sets, kinematic_class
from .errors import RfsfError, ConfigError, ContractError, DimensionError, FormatError, NumericalError
from .io import save_checkpoint, load_checkpoint, get_outdir, file_sha256
from .loss import cross_entropy, bce_with_logits, bag_nll
from .metrics import AverageMeter, MetricsReport, acc_top1, confusion_matrix, metrics
