"""Seeded single-writer training loop.

AdamW with cosine-decayed learning rate and class-weighted
cross-entropy. Class weighting is "balanced": w_c = N_total / (2 * N_c).
Batch loss follows the weighted-mean convention
sum(w_i * nll_i) / sum(w_i), so gradients are invariant to uniform
weight rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import ImageRaster
from ..errors import ContractError
from .augment import AugmentationConfig, apply_augmentations
from .engine import backward_params, forward, normalize_input, softmax
from .model import ModelSpec, init_weights


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 0.01
    eps: float = 1e-8
    epochs: int = 50
    batch_size: int = 8
    class_weights: Optional[tuple] = None  # None = balanced from labels
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ContractError("learning rate must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ContractError("batch size and epochs must be >= 1")
        if self.seed < 0:
            raise ContractError("seed must be non-negative")
        if self.class_weights is not None:
            cw = tuple(float(w) for w in self.class_weights)
            if len(cw) != 2 or min(cw) <= 0:
                raise ContractError("need 2 positive class weights")
            object.__setattr__(self, "class_weights", cw)


def balanced_class_weights(labels) -> tuple:
    """w_c = N_total / (2 * N_c); requires both classes present."""
    labels = list(labels)
    n0 = sum(1 for y in labels if y == 0)
    n1 = len(labels) - n0
    if n0 == 0 or n1 == 0:
        raise ContractError(
            "balanced class weighting needs both classes in the dataset"
        )
    total = len(labels)
    return (total / (2.0 * n0), total / (2.0 * n1))


def cosine_lr(lr0: float, epoch: int, total_epochs: int) -> float:
    """lr0 at epoch 0, annealed to ~0 at the final epoch."""
    if total_epochs <= 1:
        return lr0
    return lr0 * 0.5 * (1.0 + math.cos(math.pi * epoch / total_epochs))


class AdamW:
    """Decoupled weight decay; state keyed like the weights dict."""

    def __init__(self, config: TrainConfig):
        self.cfg = config
        self.m: dict = {}
        self.v: dict = {}
        self.t = 0

    def step(self, weights: dict, grads: dict, lr: float) -> None:
        cfg = self.cfg
        self.t += 1
        bc1 = 1.0 - cfg.beta1**self.t
        bc2 = 1.0 - cfg.beta2**self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] = cfg.beta1 * self.m[k] + (1.0 - cfg.beta1) * g
            self.v[k] = cfg.beta2 * self.v[k] + (1.0 - cfg.beta2) * g * g
            m_hat = self.m[k] / bc1
            v_hat = self.v[k] / bc2
            weights[k] = weights[k] - lr * (
                m_hat / (np.sqrt(v_hat) + cfg.eps) + cfg.weight_decay * weights[k]
            )


def _sample_tensor(x, augment, seed_parts):
    if isinstance(x, ImageRaster):
        if augment is not None:
            x = apply_augmentations(x, augment, seed=np.random.SeedSequence(seed_parts))
        return normalize_input(x)
    if augment is not None:
        raise ContractError("augmentations need 8-bit images, not tensors")
    return np.asarray(x, dtype=np.float64)


def train(
    spec: ModelSpec,
    dataset: list,
    config: TrainConfig,
    augmentations: Optional[AugmentationConfig] = None,
    initial_weights: Optional[dict] = None,
):
    """Train on [(input, label)] pairs; label 0 = no-crack, 1 = crack.

    Inputs may be 8-bit RGB ImageRasters (augmented per epoch, then
    normalized) or pre-normalized (C,H,W) tensors. Returns
    (weights, per-epoch metrics). Deterministic given config.seed.
    """
    if not dataset:
        raise ContractError("dataset must be non-empty")
    labels = [int(y) for _, y in dataset]
    if any(y not in (0, 1) for y in labels):
        raise ContractError("labels must be 0 or 1")
    class_weights = config.class_weights or balanced_class_weights(labels)
    cw = np.asarray(class_weights, dtype=np.float64)

    weights = (
        {k: v.copy() for k, v in initial_weights.items()}
        if initial_weights is not None
        else init_weights(spec, seed=config.seed)
    )
    opt = AdamW(config)
    n = len(dataset)
    metrics = []
    for epoch in range(config.epochs):
        lr = cosine_lr(config.learning_rate, epoch, config.epochs)
        order = np.random.default_rng([config.seed, epoch, 0xD5]).permutation(n)
        epoch_loss = 0.0
        epoch_weight = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            # batch normalizer depends on labels only, so caches need
            # not outlive their sample
            batch_w = float(sum(cw[int(dataset[i][1])] for i in batch))
            grads_sum: dict = {}
            for i in batch:
                x_raw, y = dataset[i]
                y = int(y)
                x = _sample_tensor(x_raw, augmentations, [config.seed, epoch, int(i)])
                logits, cache = forward(spec, weights, x)
                p = softmax(logits)
                w_i = float(cw[y])
                if int(np.argmax(logits)) == y:
                    correct += 1
                grad_logits = p.copy()
                grad_logits[y] -= 1.0
                grad_logits *= w_i / batch_w
                g = backward_params(spec, weights, cache, grad_logits)
                del cache
                for k, v in g.items():
                    if k in grads_sum:
                        grads_sum[k] += v
                    else:
                        grads_sum[k] = v
                epoch_loss += w_i * -math.log(max(p[y], 1e-300))
                epoch_weight += w_i
            opt.step(weights, grads_sum, lr)
        metrics.append(
            {
                "epoch": epoch,
                "lr": lr,
                "loss": epoch_loss / epoch_weight,
                "accuracy": correct / n,
            }
        )
    return weights, metrics
