"""Training-time photometric and geometric augmentations.

Applied in a fixed order: horizontal flip, vertical flip, rotation,
color jitter. Random draws are consumed in that order too (lazily, only
when a stage fires), so a seed fully determines the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import ImageRaster
from ..errors import ContractError


@dataclass(frozen=True)
class AugmentationConfig:
    hflip_p: float = 0.5
    vflip_p: float = 0.5
    affine_p: float = 0.5
    rotation_max_deg: float = 90.0
    jitter_p: float = 0.25
    jitter_strength: float = 0.1

    def __post_init__(self):
        for p in (self.hflip_p, self.vflip_p, self.affine_p, self.jitter_p):
            if not 0.0 <= p <= 1.0:
                raise ContractError("augmentation probabilities must lie in [0,1]")
        if not 0.0 <= self.jitter_strength <= 0.5:
            raise ContractError("jitter strength must lie in [0, 0.5]")
        if self.rotation_max_deg < 0.0:
            raise ContractError("rotation bound must be >= 0")


def _reflect_index(idx: np.ndarray, n: int) -> np.ndarray:
    """Mirror out-of-range indices about the edge pixels (no edge
    repeat), matching reflect padding."""
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    m = np.mod(idx, period)
    return np.where(m < n, m, period - m)


def rotate_bilinear(pixels: np.ndarray, angle_deg: float) -> np.ndarray:
    """Rotate (H,W,C) float pixels about the center, bilinear sampling
    with reflect padding; output keeps the input size."""
    h, w = pixels.shape[:2]
    theta = math.radians(angle_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    dx = xs - cx
    dy = ys - cy
    # inverse mapping: sample the source at the un-rotated position
    sx = cos_t * dx + sin_t * dy + cx
    sy = -sin_t * dx + cos_t * dy + cy
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    x0r = _reflect_index(x0, w)
    x1r = _reflect_index(x0 + 1, w)
    y0r = _reflect_index(y0, h)
    y1r = _reflect_index(y0 + 1, h)
    p00 = pixels[y0r, x0r]
    p01 = pixels[y0r, x1r]
    p10 = pixels[y1r, x0r]
    p11 = pixels[y1r, x1r]
    top = p00 * (1 - fx) + p01 * fx
    bot = p10 * (1 - fx) + p11 * fx
    return top * (1 - fy) + bot * fy


def _rgb_to_hsv(rgb: np.ndarray):
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    v = maxc
    rng = maxc - minc
    s = np.where(maxc > 0, rng / np.where(maxc > 0, maxc, 1.0), 0.0)
    safe = np.where(rng > 0, rng, 1.0)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = np.where(maxc == r, bc - gc, np.where(maxc == g, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(rng > 0, (h / 6.0) % 1.0, 0.0)
    return h, s, v


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    i = np.floor(h * 6.0).astype(np.int64) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


_GRAY = np.array([0.299, 0.587, 0.114])


def _jitter(img: np.ndarray, rng: np.random.Generator, s: float) -> np.ndarray:
    lo = max(0.0, 1.0 - s)
    f = rng.uniform(lo, 1.0 + s)  # brightness
    img = np.clip(img * f, 0.0, 1.0)
    f = rng.uniform(lo, 1.0 + s)  # contrast, blend toward the mean gray
    img = np.clip(img * f + (img @ _GRAY).mean() * (1.0 - f), 0.0, 1.0)
    f = rng.uniform(lo, 1.0 + s)  # saturation, blend toward per-pixel gray
    img = np.clip(img * f + (img @ _GRAY)[..., None] * (1.0 - f), 0.0, 1.0)
    shift = rng.uniform(-s, s)  # hue, fraction of the color circle
    h, sat, v = _rgb_to_hsv(img)
    return _hsv_to_rgb((h + shift) % 1.0, sat, v)


def apply_augmentations(
    image: ImageRaster, config: AugmentationConfig, seed: int
) -> ImageRaster:
    """Deterministic per seed; returns a new 8-bit image."""
    if image.channels != 3 or image.mode != "u8":
        raise ContractError("augmentations expect an 8-bit RGB image")
    rng = np.random.default_rng(seed)
    arr = image.array.astype(np.float64) / 255.0
    if rng.random() < config.hflip_p:
        arr = arr[:, ::-1, :]
    if rng.random() < config.vflip_p:
        arr = arr[::-1, :, :]
    if rng.random() < config.affine_p:
        angle = rng.uniform(0.0, config.rotation_max_deg)
        arr = rotate_bilinear(np.ascontiguousarray(arr), angle)
    if rng.random() < config.jitter_p:
        arr = _jitter(arr, rng, config.jitter_strength)
    out = np.clip(np.round(np.clip(arr, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
    return ImageRaster(out, mode="u8")
