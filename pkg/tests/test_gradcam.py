"""Grad-CAM formula checks and the upsampling contract."""

import numpy as np
import pytest

from hairline.errors import ContractError
from hairline.kernels import bilinear_resize
from hairline.nn.engine import grad_cam


class TestFormula:
    def test_two_channel_hand_case(self):
        a1 = np.array([[1.0, 0.0], [0.0, 0.0]])
        a2 = np.array([[0.0, 2.0], [0.0, 0.0]])
        acts = np.stack([a1, a2])
        grads = np.stack([np.full((2, 2), 0.5), np.full((2, 2), -1.0)])
        # alpha = (0.5, -1); L = relu(0.5*a1 - a2) = [[0.5, 0], [0, 0]]
        hm = grad_cam(acts, grads, output_size=2)
        np.testing.assert_array_equal(hm.array, [[0.5, 0.0], [0.0, 0.0]])

    def test_unit_gradient_is_relu_of_activation(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(1, 4, 4))
        hm = grad_cam(a, np.ones_like(a), output_size=4)
        np.testing.assert_allclose(hm.array, np.maximum(a[0], 0.0))

    def test_negative_alpha_all_positive_map_zero(self):
        a = np.ones((1, 3, 3))
        g = np.full((1, 3, 3), -2.0)
        hm = grad_cam(a, g, output_size=3)
        np.testing.assert_array_equal(hm.array, np.zeros((3, 3)))

    def test_nonnegative_over_random_cases(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            k = int(rng.integers(1, 5))
            s = int(rng.integers(2, 7))
            a = rng.normal(size=(k, s, s))
            g = rng.normal(size=(k, s, s))
            out = int(rng.integers(s, 4 * s))
            hm = grad_cam(a, g, output_size=out)
            assert hm.array.min() >= 0.0
            assert hm.array.shape == (out, out)

    def test_upsample_is_bilinear_of_cam(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(2, 3, 3))
        g = rng.normal(size=(2, 3, 3))
        alpha = g.mean(axis=(1, 2))
        cam = np.maximum(np.tensordot(alpha, a, axes=1), 0.0)
        hm = grad_cam(a, g, output_size=9)
        np.testing.assert_allclose(hm.array, np.maximum(bilinear_resize(cam, 9, 9), 0.0))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ContractError):
            grad_cam(np.zeros((2, 3, 3)), np.zeros((2, 4, 4)), output_size=4)

    def test_bad_output_size_rejected(self):
        with pytest.raises(ContractError):
            grad_cam(np.zeros((1, 2, 2)), np.zeros((1, 2, 2)), output_size=0)
