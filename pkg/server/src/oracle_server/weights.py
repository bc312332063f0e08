"""Independent reader and forward pass for the .mlpw weights format.

Implements the binary layout and forward-pass semantics documented in
the repo-root PROTOCOL.md. Deliberately self-contained: cross-
implementation agreement with the attack toolkit's in-process oracle is
part of the conformance test surface, so nothing here is shared code.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"MLPW"
VERSION = 1
ACT_NONE, ACT_RELU = 0, 1


class WeightsFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    relu: bool


@dataclass(frozen=True)
class Model:
    input_shape: tuple[int, int, int]
    layers: tuple

    @property
    def num_classes(self) -> int:
        return int(self.layers[-1].weights.shape[0])

    @property
    def input_dim(self) -> int:
        h, w, c = self.input_shape
        return h * w * c


def load_model(path) -> Model:
    data = Path(path).read_bytes()
    if len(data) < 24 or data[:4] != MAGIC:
        raise WeightsFormatError("not a MLPW file")
    version, h, w, c, n_layers = struct.unpack_from("<IIIII", data, 4)
    if version != VERSION:
        raise WeightsFormatError(f"unsupported version {version}")
    if n_layers < 1 or min(h, w, c) < 1:
        raise WeightsFormatError("degenerate network")
    offset = 24
    layers = []
    prev = h * w * c
    for i in range(n_layers):
        if offset + 9 > len(data):
            raise WeightsFormatError(f"truncated at layer {i}")
        rows, cols, act = struct.unpack_from("<IIB", data, offset)
        offset += 9
        if act not in (ACT_NONE, ACT_RELU):
            raise WeightsFormatError(f"unknown activation {act}")
        if cols != prev:
            raise WeightsFormatError(f"layer {i} width mismatch")
        need = 4 * rows * (cols + 1)
        if offset + need > len(data):
            raise WeightsFormatError(f"truncated payload at layer {i}")
        wmat = np.frombuffer(data, "<f4", rows * cols, offset).reshape(rows, cols)
        offset += 4 * rows * cols
        bias = np.frombuffer(data, "<f4", rows, offset)
        offset += 4 * rows
        layers.append(Layer(wmat.copy(), bias.copy(), act == ACT_RELU))
        prev = rows
    if offset != len(data):
        raise WeightsFormatError("trailing bytes")
    return Model(input_shape=(h, w, c), layers=tuple(layers))


def builtin_demo_model() -> Model:
    """A small deterministic 16x16x1 two-class network."""
    rng = np.random.default_rng(8675309)
    w1 = rng.normal(0.0, 0.25, size=(8, 256)).astype(np.float32)
    b1 = rng.normal(0.0, 0.1, size=8).astype(np.float32)
    w2 = rng.normal(0.0, 0.5, size=(2, 8)).astype(np.float32)
    b2 = rng.normal(0.0, 0.1, size=2).astype(np.float32)
    return Model(input_shape=(16, 16, 1),
                 layers=(Layer(w1, b1, True), Layer(w2, b2, False)))


def classify(model: Model, values, squeeze_bits: int | None = None) -> int:
    """Label for a flat input vector; argmax, lowest index wins ties."""
    a = np.clip(np.asarray(values, dtype=np.float64).reshape(-1), 0.0, 1.0)
    if squeeze_bits is not None:
        levels = (1 << squeeze_bits) - 1
        a = np.floor(a * levels + 0.5) / levels
    for layer in model.layers:
        a = layer.weights.astype(np.float64) @ a + layer.bias.astype(np.float64)
        if layer.relu:
            a = np.maximum(a, 0.0)
    return int(np.argmax(a))
