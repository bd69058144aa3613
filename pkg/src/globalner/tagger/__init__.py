from .assemble import CLS, DEFAULT_BUDGET, SEP, AssembledInput, assemble_masked_input
from .crf import (
    UNTYPED_LABELS,
    CrfModel,
    Tagger,
    bio_penalties,
    crf_gradient,
    crf_log_partition,
    crf_nll,
    log_partition,
    path_score,
    viterbi,
    viterbi_decode,
)
from .features import FeatureProvider, TokenFeatures, WindowFeatures
from .train import OptimizerConfig, TrainResult, TrainingDivergedError, train

__all__ = [
    "CLS", "DEFAULT_BUDGET", "SEP", "UNTYPED_LABELS", "AssembledInput", "CrfModel", "FeatureProvider",
    "OptimizerConfig", "Tagger", "TokenFeatures", "TrainResult", "TrainingDivergedError",
    "WindowFeatures", "assemble_masked_input", "bio_penalties", "crf_gradient", "crf_log_partition",
    "crf_nll", "log_partition", "path_score", "train", "viterbi", "viterbi_decode",
]
