from pathlib import Path

import numpy as np
import pytest

from oracle_server.weights import (WeightsFormatError, builtin_demo_model,
                                   classify, load_model)

FIXTURE_DIR = Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "mlp16"


class TestLoadModel:
    def test_bundled_fixture_labels(self):
        model = load_model(FIXTURE_DIR / "weights.mlpw")
        assert model.input_shape == (16, 16, 1)
        assert model.num_classes == 2
        inputs = np.load(FIXTURE_DIR / "inputs.npy")
        expected = [int(v) for v in
                    (FIXTURE_DIR / "expected_labels.txt").read_text().split()]
        got = [classify(model, row) for row in inputs]
        assert got == expected

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.mlpw"
        path.write_bytes(b"XXXX" + bytes(32))
        with pytest.raises(WeightsFormatError):
            load_model(path)

    def test_truncated(self, tmp_path):
        good = (FIXTURE_DIR / "weights.mlpw").read_bytes()
        path = tmp_path / "short.mlpw"
        path.write_bytes(good[:40])
        with pytest.raises(WeightsFormatError):
            load_model(path)


class TestClassify:
    def test_clips_input(self):
        model = builtin_demo_model()
        a = classify(model, np.full(256, 0.7))
        b = classify(model, np.clip(np.full(256, 0.7), 0, 1))
        assert a == b

    def test_deterministic(self):
        model = builtin_demo_model()
        x = np.random.default_rng(3).uniform(0, 1, size=256)
        assert classify(model, x) == classify(model, x)

    def test_squeeze_bits_quantizes(self):
        model = builtin_demo_model()
        rng = np.random.default_rng(4)
        for _ in range(20):
            x = rng.uniform(0, 1, size=256)
            levels = 7
            quantized = np.floor(np.clip(x, 0, 1) * levels + 0.5) / levels
            assert classify(model, x, squeeze_bits=3) == classify(model, quantized)
