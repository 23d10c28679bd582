"""Forward and backward execution over a ModelSpec.

Everything runs in float64 on (C, H, W) arrays. The activation cache
keeps the input of every layer so the backward pass can stop at any
intermediate activation map, which is what the attribution pass needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..core import ImageRaster
from ..errors import ContractError, NumericError
from ..postproc import Heatmap
from .model import Conv2d, Dense, GlobalAveragePool, MaxPool, ModelSpec, ReLU


@dataclass(frozen=True)
class NormalizationConstants:
    mean: tuple = (0.485, 0.456, 0.406)
    std: tuple = (0.229, 0.224, 0.225)

    def __post_init__(self):
        if len(self.mean) != 3 or len(self.std) != 3:
            raise ContractError("normalization constants are per RGB channel")
        if min(self.std) <= 0:
            raise ContractError("std components must be positive")


IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


def normalize_input(
    image: ImageRaster, constants: NormalizationConstants = NormalizationConstants()
) -> np.ndarray:
    """8-bit RGB (H,W,3) to standardized float64 (3,H,W)."""
    if image.channels != 3:
        raise ContractError("normalization expects a 3-channel image")
    if image.mode != "u8":
        raise ContractError("normalization expects 8-bit pixels")
    arr = image.array.astype(np.float64) / 255.0
    mean = np.asarray(constants.mean)
    std = np.asarray(constants.std)
    return np.ascontiguousarray(((arr - mean) / std).transpose(2, 0, 1))


def _weights_checksum(weights: dict) -> float:
    return float(sum(float(np.sum(v)) for v in weights.values()))


@dataclass
class ActivationCache:
    """activations[i] is the input to layer i; activations[n] is the
    final logits. Tied to the exact weight values that produced it."""

    spec_hash: str
    weights_checksum: float
    activations: list
    pool_args: dict


def _pool_meta(x, layer):
    out, arg = kernels.maxpool_forward(x, layer.kernel, layer.stride)
    return out, arg


def _layer_forward(layer, weights, idx, x, pool_args):
    if isinstance(layer, Conv2d):
        if x.ndim != 3 or x.shape[0] != layer.in_channels:
            raise ContractError(f"layer {idx}: expected {layer.in_channels}xHxW input")
        xp = x
        if layer.padding:
            p = layer.padding
            xp = np.pad(x, ((0, 0), (p, p), (p, p)))
        if xp.shape[1] < layer.kernel or xp.shape[2] < layer.kernel:
            raise ContractError(f"layer {idx}: input smaller than kernel")
        return kernels.conv2d_forward(
            np.ascontiguousarray(xp),
            weights[f"{idx}.weight"],
            weights[f"{idx}.bias"],
            layer.stride,
        )
    if isinstance(layer, ReLU):
        return np.maximum(x, 0.0)
    if isinstance(layer, MaxPool):
        if x.ndim != 3 or x.shape[1] < layer.kernel or x.shape[2] < layer.kernel:
            raise ContractError(f"layer {idx}: input smaller than pool window")
        out, arg = _pool_meta(np.ascontiguousarray(x), layer)
        pool_args[idx] = arg
        return out
    if isinstance(layer, GlobalAveragePool):
        if x.ndim != 3:
            raise ContractError(f"layer {idx}: global pool expects (C,H,W)")
        return x.mean(axis=(1, 2))
    if isinstance(layer, Dense):
        if x.ndim != 1 or x.shape[0] != layer.in_features:
            raise ContractError(f"layer {idx}: expected {layer.in_features} features")
        return weights[f"{idx}.weight"] @ x + weights[f"{idx}.bias"]
    raise ContractError(f"unknown layer {type(layer)!r}")


def forward(spec: ModelSpec, weights: dict, x: np.ndarray):
    """Run the model; returns (logits, cache). The cache holds every
    intermediate activation plus max-pool winner indices."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != spec.input_channels:
        raise ContractError(
            f"expected ({spec.input_channels},H,W) input, got {x.shape}"
        )
    pool_args: dict = {}
    activations = [x]
    for idx, layer in enumerate(spec.layers):
        x = _layer_forward(layer, weights, idx, x, pool_args)
        activations.append(x)
    logits = activations[-1]
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits")
    cache = ActivationCache(
        spec.spec_hash(), _weights_checksum(weights), activations, pool_args
    )
    return logits, cache


def forward_from(spec: ModelSpec, weights: dict, layer_index: int, x: np.ndarray):
    """Resume the forward pass with `x` as the input of layer_index."""
    pool_args: dict = {}
    x = np.asarray(x, dtype=np.float64)
    for idx in range(layer_index, len(spec.layers)):
        x = _layer_forward(spec.layers[idx], weights, idx, x, pool_args)
    return x


def predict_confidence(logits: np.ndarray) -> float:
    """Softmax probability of the crack class, max-shifted for
    stability."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != (2,):
        raise ContractError("expected exactly 2 logits")
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits")
    z = logits - logits.max()
    e = np.exp(z)
    return float(e[1] / e.sum())


def softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits")
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def _check_cache(spec: ModelSpec, weights: dict, cache: ActivationCache):
    if cache.spec_hash != spec.spec_hash():
        raise ContractError("cache was produced by a different model")
    if cache.weights_checksum != _weights_checksum(weights):
        raise ContractError("cache is stale: weights changed since forward")


def _layer_backward_input(layer, weights, idx, x_in, dout, pool_args):
    """Gradient w.r.t. the input of layer idx given gradient at its
    output."""
    if isinstance(layer, Conv2d):
        p = layer.padding
        hp, wp = x_in.shape[1] + 2 * p, x_in.shape[2] + 2 * p
        dx = kernels.conv2d_backward_input(
            weights[f"{idx}.weight"], np.ascontiguousarray(dout), layer.stride, hp, wp
        )
        if p:
            dx = dx[:, p:-p, p:-p]
        return np.ascontiguousarray(dx)
    if isinstance(layer, ReLU):
        return dout * (x_in > 0.0)
    if isinstance(layer, MaxPool):
        return kernels.maxpool_backward(
            np.ascontiguousarray(dout), pool_args[idx], x_in.shape[1], x_in.shape[2]
        )
    if isinstance(layer, GlobalAveragePool):
        c, h, w = x_in.shape
        return np.broadcast_to(dout[:, None, None] / (h * w), (c, h, w)).copy()
    if isinstance(layer, Dense):
        return weights[f"{idx}.weight"].T @ dout
    raise ContractError(f"unknown layer {type(layer)!r}")


def backward_to_activations(
    spec: ModelSpec, weights: dict, cache: ActivationCache, class_index: int
) -> np.ndarray:
    """d(logit[class_index]) / d(activation map of the target conv
    layer), exact up to float rounding."""
    if class_index not in (0, 1):
        raise ContractError("class_index must be 0 or 1")
    _check_cache(spec, weights, cache)
    grad = np.zeros(2)
    grad[class_index] = 1.0
    target = spec.target_layer_index
    for idx in range(len(spec.layers) - 1, target, -1):
        grad = _layer_backward_input(
            spec.layers[idx],
            weights,
            idx,
            cache.activations[idx],
            grad,
            cache.pool_args,
        )
    return grad


def backward_params(
    spec: ModelSpec, weights: dict, cache: ActivationCache, grad_logits: np.ndarray
) -> dict:
    """Parameter gradients for an arbitrary gradient at the logits."""
    _check_cache(spec, weights, cache)
    grads = {}
    grad = np.asarray(grad_logits, dtype=np.float64)
    for idx in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[idx]
        x_in = cache.activations[idx]
        if isinstance(layer, Conv2d):
            xp = x_in
            if layer.padding:
                p = layer.padding
                xp = np.pad(x_in, ((0, 0), (p, p), (p, p)))
            dw, db = kernels.conv2d_backward_params(
                np.ascontiguousarray(xp),
                np.ascontiguousarray(grad),
                layer.stride,
                layer.kernel,
            )
            grads[f"{idx}.weight"] = dw
            grads[f"{idx}.bias"] = db
        elif isinstance(layer, Dense):
            grads[f"{idx}.weight"] = np.outer(grad, x_in)
            grads[f"{idx}.bias"] = grad.copy()
        if idx:
            grad = _layer_backward_input(
                layer, weights, idx, x_in, grad, cache.pool_args
            )
    return grads


def grad_cam(
    activations: np.ndarray, gradients: np.ndarray, output_size: int
) -> Heatmap:
    """Channel weights are spatially averaged gradients; the map is the
    rectified weighted activation sum, bilinearly upsampled."""
    activations = np.asarray(activations, dtype=np.float64)
    gradients = np.asarray(gradients, dtype=np.float64)
    if activations.ndim != 3 or activations.shape != gradients.shape:
        raise ContractError("activations and gradients must share (K,h,w)")
    if output_size < 1:
        raise ContractError("output size must be positive")
    alpha = gradients.mean(axis=(1, 2))
    cam = np.maximum(np.tensordot(alpha, activations, axes=1), 0.0)
    up = kernels.bilinear_resize(np.ascontiguousarray(cam), output_size, output_size)
    return Heatmap(np.maximum(up, 0.0))
