"""Shared fixtures: micro model specs and a small synthetic dataset."""

import numpy as np
import pytest

from hairline.nn.model import Conv2d, Dense, GlobalAveragePool, MaxPool, ModelSpec, ReLU, init_weights


def micro_spec(seed: int = 0) -> ModelSpec:
    """Tiny two-conv model for gradient and forward oracles (8x8 input)."""
    rng = np.random.default_rng(seed)
    c1 = int(rng.integers(2, 5))
    c2 = int(rng.integers(2, 5))
    return ModelSpec(
        layers=(
            Conv2d(3, c1, kernel=3, stride=1, padding=1),
            ReLU(),
            Conv2d(c1, c2, kernel=3, stride=2, padding=1),
            ReLU(),
            GlobalAveragePool(),
            Dense(c2, 2),
        ),
        input_channels=3,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Two-turbine synthetic dataset at 512 px, shared across pipeline tests."""
    from hairline.synth import SceneParams, generate_dataset

    root = tmp_path_factory.mktemp("tinydata")
    params = SceneParams(size=512)
    generate_dataset(
        root,
        turbine_count=2,
        scenes_per_turbine=2,
        seed=77,
        params=params,
    )
    return root


def random_weights(spec: ModelSpec, seed: int = 0):
    return init_weights(spec, seed=seed)


def bfs_label_count(bits: np.ndarray) -> int:
    """Brute-force 8-connected component count via BFS flood fill."""
    h, w = bits.shape
    seen = np.zeros_like(bits, dtype=bool)
    count = 0
    for sy in range(h):
        for sx in range(w):
            if not bits[sy, sx] or seen[sy, sx]:
                continue
            count += 1
            stack = [(sy, sx)]
            seen[sy, sx] = True
            while stack:
                y, x = stack.pop()
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx = y + dy, x + dx
                        if (
                            0 <= ny < h
                            and 0 <= nx < w
                            and bits[ny, nx]
                            and not seen[ny, nx]
                        ):
                            seen[ny, nx] = True
                            stack.append((ny, nx))
    return count


def ellipse_blob(rng: np.random.Generator, size: int = 64) -> np.ndarray:
    """Random filled ellipse, the convex solid used by fill-equivalence
    checks."""
    rx = float(rng.uniform(10.0, 0.42 * size))
    ry = float(rng.uniform(10.0, 0.42 * size))
    cx = float(rng.uniform(rx + 2.0, size - rx - 3.0))
    cy = float(rng.uniform(ry + 2.0, size - ry - 3.0))
    ys, xs = np.mgrid[0:size, 0:size]
    return ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0
