"""Mutual-information structured pruning toolkit."""

from ._core import (
    CovarianceModel,
    MaskSet,
    ModelIoError,
    Network,
    Selection,
    TrainingDiverged,
    __version__,
    collect_covariances,
    conditional_mi,
    count_flops,
    evaluate,
    forward,
    gaussian_entropy,
    gen_data,
    layerwise_prune,
    load_model,
    magnitude_prune,
    make_mlp,
    mutual_information,
    save_model,
    select_exact,
    select_mrmr,
    squeeze,
    train,
)

__all__ = [
    "CovarianceModel",
    "MaskSet",
    "ModelIoError",
    "Network",
    "Selection",
    "TrainingDiverged",
    "__version__",
    "collect_covariances",
    "conditional_mi",
    "count_flops",
    "evaluate",
    "forward",
    "gaussian_entropy",
    "gen_data",
    "layerwise_prune",
    "load_model",
    "magnitude_prune",
    "make_mlp",
    "mutual_information",
    "save_model",
    "select_exact",
    "select_mrmr",
    "squeeze",
    "train",
]
