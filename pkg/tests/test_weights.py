"""Tests for the binary weights file: round trips and failure modes."""

import io

import numpy as np
import pytest

from mfskmodem.errors import (
    InconsistencyError,
    MagicError,
    ShapeError,
    TruncationError,
    VersionError,
)
from mfskmodem.nn import ModelConfig, build_model, load_weights, save_weights

TINY = ModelConfig(input_len=64, conv_filters=4, conv_kernel=8,
                   hidden_units=8, classes=4)


def saved_bytes(state) -> bytes:
    buffer = io.BytesIO()
    save_weights(state, buffer)
    return buffer.getvalue()


class TestRoundTrip:
    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_bit_exact(self, dtype):
        state = build_model(TINY, seed=11, dtype=dtype)
        loaded = load_weights(io.BytesIO(saved_bytes(state)))
        assert loaded.config == state.config
        assert loaded.dtype == np.dtype(dtype)
        for name, tensor in state.tensors.items():
            assert loaded.tensors[name].dtype == tensor.dtype
            assert np.array_equal(loaded.tensors[name], tensor)
            assert loaded.tensors[name].tobytes() == tensor.tobytes()

    def test_path_round_trip(self, tmp_path):
        state = build_model(TINY, seed=3)
        path = tmp_path / "model.weights"
        save_weights(state, path)
        loaded = load_weights(path)
        assert np.array_equal(loaded.tensors["hidden.weight"],
                              state.tensors["hidden.weight"])

    def test_trained_values_survive(self, rng):
        state = build_model(TINY, seed=4)
        state.tensors["conv.kernel"] += rng.standard_normal(
            state.tensors["conv.kernel"].shape).astype(np.float32)
        loaded = load_weights(io.BytesIO(saved_bytes(state)))
        assert np.array_equal(loaded.tensors["conv.kernel"], state.tensors["conv.kernel"])


class TestLoadErrors:
    def test_bad_magic(self):
        blob = bytearray(saved_bytes(build_model(TINY, seed=0)))
        blob[0] ^= 0xFF
        with pytest.raises(MagicError):
            load_weights(io.BytesIO(bytes(blob)))

    def test_empty_file_is_magic_error(self):
        with pytest.raises(MagicError):
            load_weights(io.BytesIO(b""))

    def test_bad_version(self):
        blob = bytearray(saved_bytes(build_model(TINY, seed=0)))
        blob[8:12] = (99).to_bytes(4, "little")
        with pytest.raises(VersionError):
            load_weights(io.BytesIO(bytes(blob)))

    def test_truncation_returns_no_partial_state(self):
        blob = saved_bytes(build_model(TINY, seed=0))
        with pytest.raises(TruncationError):
            load_weights(io.BytesIO(blob[: len(blob) // 2]))

    def test_trailing_bytes_rejected(self):
        blob = saved_bytes(build_model(TINY, seed=0))
        with pytest.raises(InconsistencyError, match="trailing"):
            load_weights(io.BytesIO(blob + b"junk"))

    def test_mismatched_shape_names_the_tensor(self):
        state = build_model(TINY, seed=0)
        state.tensors["conv.bias"] = np.zeros(5, dtype=np.float32)  # F is 4
        with pytest.raises(ShapeError, match="conv.bias"):
            load_weights(io.BytesIO(saved_bytes(state)))

    def test_renamed_record_reported_missing(self):
        blob = saved_bytes(build_model(TINY, seed=0))
        with pytest.raises(ShapeError, match="output.bias"):
            load_weights(io.BytesIO(blob.replace(b"output.bias", b"outputXbias")))
