"""Forward pass, normalization, and confidence against hand oracles."""

import numpy as np
import pytest

from conftest import micro_spec
from hairline.core import ImageRaster
from hairline.errors import ContractError, NumericError
from hairline.nn.engine import (
    NormalizationConstants,
    forward,
    normalize_input,
    predict_confidence,
    softmax,
)
from hairline.nn.model import (
    Conv2d,
    Dense,
    GlobalAveragePool,
    ModelSpec,
    ReLU,
    init_weights,
)


def rgb_image(value, h=4, w=4):
    arr = np.full((h, w, 3), value, dtype=np.uint8)
    return ImageRaster(arr, mode="u8")


class TestNormalizeInput:
    def test_mean_pixel_maps_to_zero(self):
        # channel 0 mean is 0.485; 124/255 = 0.4863 is the nearest u8 step
        arr = np.zeros((2, 2, 3), dtype=np.uint8)
        arr[..., 0] = 124
        t = normalize_input(ImageRaster(arr, mode="u8"), NormalizationConstants())
        expected = (124 / 255 - 0.485) / 0.229
        assert t[0, 0, 0] == pytest.approx(expected)
        assert abs(t[0, 0, 0]) < 0.01

    def test_zero_pixel_channel0(self):
        t = normalize_input(rgb_image(0), NormalizationConstants())
        assert t[0, 0, 0] == pytest.approx(-0.485 / 0.229)
        assert t[0, 0, 0] == pytest.approx(-2.1179, abs=1e-4)

    def test_full_pixel_channel2(self):
        t = normalize_input(rgb_image(255), NormalizationConstants())
        assert t[2, 0, 0] == pytest.approx((1 - 0.406) / 0.225)
        assert t[2, 0, 0] == pytest.approx(2.64, abs=1e-2)

    def test_output_layout_chw(self):
        t = normalize_input(rgb_image(7, h=3, w=5), NormalizationConstants())
        assert t.shape == (3, 3, 5)
        assert t.dtype == np.float64

    def test_gray_input_rejected(self):
        img = ImageRaster(np.zeros((4, 4), dtype=np.uint8), mode="u8")
        with pytest.raises(ContractError):
            normalize_input(img, NormalizationConstants())


def conv_layer_ref(x, w, b, stride, padding):
    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    co, ci, k, _ = w.shape
    _, hp, wp = xp.shape
    oh = (hp - k) // stride + 1
    ow = (wp - k) // stride + 1
    out = np.zeros((co, oh, ow))
    for o in range(co):
        for y in range(oh):
            for x_ in range(ow):
                acc = b[o]
                for c in range(ci):
                    for ky in range(k):
                        for kx in range(k):
                            acc += w[o, c, ky, kx] * xp[c, y * stride + ky, x_ * stride + kx]
                out[o, y, x_] = acc
    return out


def forward_ref(spec, weights, x):
    """Layer-by-layer reference with plain loops and numpy reductions."""
    h = x
    for i, layer in enumerate(spec.layers):
        kind = type(layer).__name__
        if kind == "Conv2d":
            h = conv_layer_ref(
                h, weights[f"{i}.weight"], weights[f"{i}.bias"], layer.stride, layer.padding
            )
        elif kind == "ReLU":
            h = np.maximum(h, 0.0)
        elif kind == "MaxPool":
            c, hh, ww = h.shape
            oh = (hh - layer.kernel) // layer.stride + 1
            ow = (ww - layer.kernel) // layer.stride + 1
            out = np.zeros((c, oh, ow))
            for cc in range(c):
                for y in range(oh):
                    for x_ in range(ow):
                        patch = h[
                            cc,
                            y * layer.stride : y * layer.stride + layer.kernel,
                            x_ * layer.stride : x_ * layer.stride + layer.kernel,
                        ]
                        out[cc, y, x_] = patch.max()
            h = out
        elif kind == "GlobalAveragePool":
            h = h.mean(axis=(1, 2))
        elif kind == "Dense":
            h = weights[f"{i}.weight"] @ h + weights[f"{i}.bias"]
    return h


class TestForward:
    def test_zero_weights_zero_logits(self):
        spec = micro_spec(0)
        weights = {k: np.zeros_like(v) for k, v in init_weights(spec, seed=0).items()}
        x = np.random.default_rng(0).normal(size=(3, 8, 8))
        logits, _ = forward(spec, weights, x)
        np.testing.assert_array_equal(logits, [0.0, 0.0])

    def test_identity_conv_gap_dense_constant_input(self):
        # 1x1 conv with unit weight, identity dense: logits = input constant
        spec = ModelSpec(
            layers=(
                Conv2d(1, 1, kernel=1, stride=1, padding=0),
                GlobalAveragePool(),
                Dense(1, 2),
            ),
            input_channels=1,
        )
        weights = {
            "0.weight": np.ones((1, 1, 1, 1)),
            "0.bias": np.zeros(1),
            "2.weight": np.ones((2, 1)),
            "2.bias": np.zeros(2),
        }
        k = 3.75
        logits, _ = forward(spec, weights, np.full((1, 5, 5), k))
        np.testing.assert_allclose(logits, [k, k])

    def test_matches_reference_implementation(self, rng):
        for seed in range(4):
            spec = micro_spec(seed)
            weights = init_weights(spec, seed=seed)
            x = rng.normal(size=(3, 32, 32))
            logits, _ = forward(spec, weights, x)
            ref = forward_ref(spec, weights, x)
            np.testing.assert_allclose(logits, ref, rtol=1e-6)

    def test_shape_mismatch_rejected(self):
        spec = micro_spec(0)
        weights = init_weights(spec, seed=0)
        with pytest.raises(ContractError):
            forward(spec, weights, np.zeros((1, 8, 8)))

    def test_deterministic_across_runs(self, rng):
        spec = micro_spec(1)
        weights = init_weights(spec, seed=1)
        x = rng.normal(size=(3, 16, 16))
        a, _ = forward(spec, weights, x)
        b, _ = forward(spec, weights, x)
        np.testing.assert_array_equal(a, b)

    def test_cache_covers_every_layer(self):
        spec = micro_spec(0)
        weights = init_weights(spec, seed=0)
        _, cache = forward(spec, weights, np.zeros((3, 8, 8)))
        assert len(cache.activations) == len(spec.layers) + 1


class TestConfidence:
    def test_symmetric_logits(self):
        assert predict_confidence(np.array([0.0, 0.0])) == pytest.approx(0.5)

    def test_ln3_closed_form(self):
        assert predict_confidence(np.array([0.0, np.log(3)])) == pytest.approx(0.75)

    def test_large_logits_no_overflow(self):
        c = predict_confidence(np.array([1000.0, 1001.0]))
        assert c == pytest.approx(1 / (1 + np.exp(-1)), abs=1e-6)
        assert c == pytest.approx(0.731, abs=1e-3)

    def test_nonfinite_rejected(self):
        with pytest.raises(NumericError):
            predict_confidence(np.array([np.nan, 0.0]))

    def test_wrong_arity_rejected(self):
        with pytest.raises(ContractError):
            predict_confidence(np.array([0.0, 0.0, 0.0]))

    def test_softmax_sums_to_one(self, rng):
        for _ in range(20):
            z = rng.normal(size=2) * 50
            assert softmax(z).sum() == pytest.approx(1.0, abs=1e-12)

    def test_softmax_shift_invariant(self, rng):
        z = rng.normal(size=2)
        np.testing.assert_allclose(softmax(z), softmax(z + 123.4), atol=1e-12)
