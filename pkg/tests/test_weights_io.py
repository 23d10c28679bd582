"""Weight container round trips and corruption handling."""

import json

import numpy as np
import pytest

from conftest import micro_spec
from hairline.errors import SpecMismatchError, WeightsIOError
from hairline.nn.model import default_model, init_weights
from hairline.nn.weights_io import (
    load_model,
    load_weights,
    save_model,
    save_weights,
)


@pytest.fixture
def spec_and_weights():
    spec = micro_spec(0)
    return spec, init_weights(spec, seed=3)


class TestRoundTrip:
    def test_bit_exact(self, tmp_path, spec_and_weights):
        spec, weights = spec_and_weights
        path = tmp_path / "w.hlw"
        save_weights(weights, path, spec)
        loaded = load_weights(path, spec)
        assert set(loaded) == set(weights)
        for k in weights:
            assert loaded[k].dtype == np.float64
            np.testing.assert_array_equal(loaded[k], weights[k])

    def test_overwrite_is_atomic_replace(self, tmp_path, spec_and_weights):
        spec, weights = spec_and_weights
        path = tmp_path / "w.hlw"
        save_weights(weights, path, spec)
        bumped = {k: v + 1.0 for k, v in weights.items()}
        save_weights(bumped, path, spec)
        loaded = load_weights(path, spec)
        np.testing.assert_array_equal(loaded["0.weight"], bumped["0.weight"])

    def test_model_dir_round_trip(self, tmp_path):
        spec = default_model()
        weights = init_weights(spec, seed=0)
        save_model(tmp_path / "m", spec, weights)
        spec2, weights2 = load_model(tmp_path / "m")
        assert spec2.spec_hash() == spec.spec_hash()
        for k in weights:
            np.testing.assert_array_equal(weights2[k], weights[k])


class TestCorruption:
    def test_truncated_file(self, tmp_path, spec_and_weights):
        spec, weights = spec_and_weights
        path = tmp_path / "w.hlw"
        save_weights(weights, path, spec)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 64])
        with pytest.raises(WeightsIOError):
            load_weights(path, spec)

    def test_bad_magic(self, tmp_path, spec_and_weights):
        spec, weights = spec_and_weights
        path = tmp_path / "w.hlw"
        save_weights(weights, path, spec)
        data = bytearray(path.read_bytes())
        data[:4] = b"XXXX"
        path.write_bytes(bytes(data))
        with pytest.raises(WeightsIOError):
            load_weights(path, spec)

    def test_spec_mismatch(self, tmp_path, spec_and_weights):
        spec, weights = spec_and_weights
        path = tmp_path / "w.hlw"
        save_weights(weights, path, spec)
        other = micro_spec(9)
        assert other.spec_hash() != spec.spec_hash()
        with pytest.raises(SpecMismatchError):
            load_weights(path, other)

    def test_mismatch_is_io_error_subtype(self):
        assert issubclass(SpecMismatchError, WeightsIOError)

    def test_header_is_json_after_magic(self, tmp_path, spec_and_weights):
        spec, weights = spec_and_weights
        path = tmp_path / "w.hlw"
        save_weights(weights, path, spec)
        raw = path.read_bytes()
        assert raw[:4] == b"HLW1"
        hlen = int.from_bytes(raw[4:8], "little")
        header = json.loads(raw[8 : 8 + hlen])
        assert header["spec_hash"] == spec.spec_hash()
        assert {a["name"] for a in header["arrays"]} == set(weights)

    def test_missing_file(self, tmp_path, spec_and_weights):
        spec, _ = spec_and_weights
        with pytest.raises(WeightsIOError):
            load_weights(tmp_path / "absent.hlw", spec)
