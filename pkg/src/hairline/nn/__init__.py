"""Gradient-capable convolutional classifier: layer specs, forward and
backward passes, attribution maps, training loop, and weight files."""

from .model import (
    Conv2d,
    Dense,
    GlobalAveragePool,
    MaxPool,
    ModelSpec,
    ReLU,
    count_flops,
    count_params,
    default_model,
    init_weights,
)
from .engine import (
    IMAGENET_MEAN,
    IMAGENET_STD,
    NormalizationConstants,
    backward_params,
    backward_to_activations,
    forward,
    forward_from,
    grad_cam,
    normalize_input,
    predict_confidence,
)
from .augment import AugmentationConfig, apply_augmentations
from .train import TrainConfig, balanced_class_weights, cosine_lr, train
from .weights_io import load_weights, save_weights

__all__ = [
    "Conv2d",
    "Dense",
    "GlobalAveragePool",
    "MaxPool",
    "ModelSpec",
    "ReLU",
    "count_flops",
    "count_params",
    "default_model",
    "init_weights",
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "NormalizationConstants",
    "backward_params",
    "backward_to_activations",
    "forward",
    "forward_from",
    "grad_cam",
    "normalize_input",
    "predict_confidence",
    "AugmentationConfig",
    "apply_augmentations",
    "TrainConfig",
    "balanced_class_weights",
    "cosine_lr",
    "train",
    "load_weights",
    "save_weights",
]
