"""Model architecture description and static accounting.

A model is an ordered tuple of layer specs. Channel compatibility and
the 2-logit output contract are checked at construction; spatial sizes
depend on the input and are checked during execution.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..errors import ContractError

CLASS_NO_CRACK = 0
CLASS_CRACK = 1
NUM_CLASSES = 2


@dataclass(frozen=True)
class Conv2d:
    in_channels: int
    out_channels: int
    kernel: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if min(self.in_channels, self.out_channels, self.kernel, self.stride) < 1:
            raise ContractError("conv channels, kernel, and stride must be >= 1")
        if self.padding < 0:
            raise ContractError("conv padding must be >= 0")


@dataclass(frozen=True)
class ReLU:
    pass


@dataclass(frozen=True)
class MaxPool:
    kernel: int
    stride: int

    def __post_init__(self):
        if self.kernel < 1 or self.stride < 1:
            raise ContractError("pool kernel and stride must be >= 1")


@dataclass(frozen=True)
class GlobalAveragePool:
    pass


@dataclass(frozen=True)
class Dense:
    in_features: int
    out_features: int

    def __post_init__(self):
        if self.in_features < 1 or self.out_features < 1:
            raise ContractError("dense feature counts must be >= 1")


Layer = Union[Conv2d, ReLU, MaxPool, GlobalAveragePool, Dense]

_KIND = {
    Conv2d: "conv2d",
    ReLU: "relu",
    MaxPool: "maxpool",
    GlobalAveragePool: "global_average_pool",
    Dense: "dense",
}


def _layer_json(layer: Layer) -> dict:
    d = {"kind": _KIND[type(layer)]}
    d.update(layer.__dict__)
    return d


@dataclass(frozen=True)
class ModelSpec:
    """Ordered layer list plus the conv layer whose activation map feeds
    the attribution pass (defaults to the last conv)."""

    layers: tuple
    input_channels: int = 3
    target_layer_index: Optional[int] = None

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ContractError("model needs at least one layer")

        channels = self.input_channels
        spatial = True  # still (C,H,W) until global average pool
        conv_indices = []
        for i, layer in enumerate(layers):
            if isinstance(layer, Conv2d):
                if not spatial:
                    raise ContractError(f"layer {i}: conv after pooling to features")
                if layer.in_channels != channels:
                    raise ContractError(
                        f"layer {i}: conv expects {layer.in_channels} channels, "
                        f"gets {channels}"
                    )
                channels = layer.out_channels
                conv_indices.append(i)
            elif isinstance(layer, MaxPool):
                if not spatial:
                    raise ContractError(f"layer {i}: pool after pooling to features")
            elif isinstance(layer, GlobalAveragePool):
                if not spatial:
                    raise ContractError(f"layer {i}: repeated global pooling")
                spatial = False
            elif isinstance(layer, Dense):
                if spatial:
                    raise ContractError(f"layer {i}: dense requires pooled features")
                if layer.in_features != channels:
                    raise ContractError(
                        f"layer {i}: dense expects {layer.in_features} features, "
                        f"gets {channels}"
                    )
                channels = layer.out_features
            elif not isinstance(layer, ReLU):
                raise ContractError(f"layer {i}: unknown layer type {type(layer)!r}")

        if spatial or channels != NUM_CLASSES:
            raise ContractError("model must end with exactly 2 logits")

        target = self.target_layer_index
        if target is None:
            if not conv_indices:
                raise ContractError("model has no conv layer to attribute")
            target = conv_indices[-1]
        if not (0 <= target < len(layers)) or not isinstance(layers[target], Conv2d):
            raise ContractError("target_layer_index must name a conv layer")
        object.__setattr__(self, "target_layer_index", target)

    def spec_hash(self) -> str:
        doc = {
            "input_channels": self.input_channels,
            "target_layer_index": self.target_layer_index,
            "layers": [_layer_json(l) for l in self.layers],
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("ascii")).hexdigest()


def count_params(spec: ModelSpec) -> int:
    total = 0
    for layer in spec.layers:
        if isinstance(layer, Conv2d):
            total += layer.out_channels * layer.in_channels * layer.kernel**2
            total += layer.out_channels
        elif isinstance(layer, Dense):
            total += layer.out_features * layer.in_features + layer.out_features
    return total


def conv_output_hw(h: int, w: int, kernel: int, stride: int, padding: int):
    oh = (h + 2 * padding - kernel) // stride + 1
    ow = (w + 2 * padding - kernel) // stride + 1
    if oh < 1 or ow < 1:
        raise ContractError(f"window {kernel} too large for {h}x{w} input")
    return oh, ow


def count_flops(spec: ModelSpec, input_shape=(3, 1024, 1024)) -> int:
    """Multiply-accumulate count, one fused multiply-add per op; pools,
    activations, and bias adds are not counted."""
    c, h, w = input_shape
    if c != spec.input_channels:
        raise ContractError("input shape does not match the model")
    total = 0
    for layer in spec.layers:
        if isinstance(layer, Conv2d):
            h, w = conv_output_hw(h, w, layer.kernel, layer.stride, layer.padding)
            c = layer.out_channels
            total += c * h * w * layer.in_channels * layer.kernel**2
        elif isinstance(layer, MaxPool):
            h, w = conv_output_hw(h, w, layer.kernel, layer.stride, 0)
        elif isinstance(layer, GlobalAveragePool):
            h = w = 1
        elif isinstance(layer, Dense):
            total += layer.out_features * layer.in_features
            c = layer.out_features
    return total


def init_weights(spec: ModelSpec, seed: int = 0) -> dict:
    """He-normal weights, zero biases, keyed '<layer_index>.weight' /
    '<layer_index>.bias'. float64 throughout."""
    rng = np.random.default_rng(seed)
    weights = {}
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, Conv2d):
            fan_in = layer.in_channels * layer.kernel**2
            shape = (layer.out_channels, layer.in_channels, layer.kernel, layer.kernel)
        elif isinstance(layer, Dense):
            fan_in = layer.in_features
            shape = (layer.out_features, layer.in_features)
        else:
            continue
        std = np.sqrt(2.0 / fan_in)
        weights[f"{i}.weight"] = rng.normal(0.0, std, size=shape)
        weights[f"{i}.bias"] = np.zeros(shape[0], dtype=np.float64)
    return weights


def default_model(input_channels: int = 3) -> ModelSpec:
    """Micro-CNN sized for single-core training on 1024px tiles.

    Strided convs downsample early; the first layer is a conv (not a
    pool) so thin dark structures survive into the feature maps. The
    last conv leaves a 64x64 grid at tile scale, 16px per attribution
    cell.
    """
    return ModelSpec(
        layers=(
            Conv2d(input_channels, 8, kernel=3, stride=2, padding=1),
            ReLU(),
            Conv2d(8, 16, kernel=3, stride=2, padding=1),
            ReLU(),
            MaxPool(kernel=2, stride=2),
            Conv2d(16, 32, kernel=3, stride=2, padding=1),
            ReLU(),
            GlobalAveragePool(),
            Dense(32, NUM_CLASSES),
        ),
        input_channels=input_channels,
    )
