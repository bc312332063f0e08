"""Hard-label classifier oracles behind one interface.

Analytic halfspace/sphere oracles give exact boundary geometry for
verification; a small feedforward net loaded from a binary weights file
stands in for a real classifier; a remote client speaks the HTTP wire
protocol (see PROTOCOL.md); and a bit-depth-squeeze wrapper reproduces
the input-squeezing defense.

Only labels leave this module. Image-domain oracles clip to [0, 1]
internally before classifying; analytic oracles do not, so their
closed-form boundary distances stay exact. Distances are always measured
on the unclipped query point.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np
import requests

from .core import Sample, Shape
from .errors import MalformedWeights, ProtocolViolation, ShapeMismatch, TransportError

WEIGHTS_MAGIC = b"MLPW"
WEIGHTS_VERSION = 1
_ACTIVATIONS = {"none": 0, "relu": 1}
_ACTIVATION_NAMES = {v: k for k, v in _ACTIVATIONS.items()}


@runtime_checkable
class Oracle(Protocol):
    num_classes: int
    input_shape: Shape

    def classify(self, x: Sample) -> int: ...


def _check_shape(x: Sample, expected: Shape) -> None:
    if x.shape != expected:
        raise ShapeMismatch(f"sample shape {x.shape} != oracle shape {expected}")


class HalfspaceOracle:
    """Two classes split by the hyperplane w.x = b; class 1 iff w.x > b."""

    def __init__(self, w, b: float, input_shape: Shape):
        w = np.asarray(w, dtype=np.float64).reshape(-1)
        if abs(np.linalg.norm(w) - 1.0) > 1e-9:
            raise ValueError("halfspace normal must be unit length")
        h, wd, c = input_shape
        if w.size != h * wd * c:
            raise ShapeMismatch("normal length does not match input_shape")
        self.w = w
        self.b = float(b)
        self.num_classes = 2
        self.input_shape = input_shape

    def classify(self, x: Sample) -> int:
        _check_shape(x, self.input_shape)
        return 1 if float(self.w @ x.values) > self.b else 0

    def crossing_distance(self, x0: Sample, direction) -> float:
        """Exact boundary distance from x0 along a direction with w.d > 0."""
        d = np.asarray(direction, dtype=np.float64).reshape(-1)
        align = float(self.w @ d)
        if align <= 0:
            return float("inf")
        return (self.b - float(self.w @ x0.values)) / align


class SphereOracle:
    """Class 1 outside the radius-R ball around the center, 0 inside."""

    def __init__(self, center, radius: float, input_shape: Shape):
        if radius <= 0:
            raise ValueError("radius must be positive")
        center = np.asarray(center, dtype=np.float64).reshape(-1)
        h, w, c = input_shape
        if center.size != h * w * c:
            raise ShapeMismatch("center length does not match input_shape")
        self.center = center
        self.radius = float(radius)
        self.num_classes = 2
        self.input_shape = input_shape

    def classify(self, x: Sample) -> int:
        _check_shape(x, self.input_shape)
        return 1 if float(np.linalg.norm(x.values - self.center)) > self.radius else 0


# ---------------------------------------------------------------------------
# MLP oracle and its binary weights format (layout in PROTOCOL.md)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MlpLayer:
    weights: np.ndarray  # (rows, cols) float32, row-major
    bias: np.ndarray  # (rows,) float32
    activation: str  # "relu" | "none"


@dataclass(frozen=True)
class MlpWeights:
    input_shape: Shape
    layers: tuple

    @property
    def num_classes(self) -> int:
        return int(self.layers[-1].weights.shape[0])


def write_weights(weights: MlpWeights, path) -> None:
    h, w, c = weights.input_shape
    blob = bytearray()
    blob += WEIGHTS_MAGIC
    blob += struct.pack("<IIIII", WEIGHTS_VERSION, h, w, c, len(weights.layers))
    for layer in weights.layers:
        rows, cols = layer.weights.shape
        blob += struct.pack("<IIB", rows, cols, _ACTIVATIONS[layer.activation])
        blob += np.ascontiguousarray(layer.weights, dtype="<f4").tobytes()
        blob += np.ascontiguousarray(layer.bias, dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(blob))


def read_weights(path) -> MlpWeights:
    """Parse and structurally validate a weights file."""
    data = Path(path).read_bytes()
    if len(data) < 24 or data[:4] != WEIGHTS_MAGIC:
        raise MalformedWeights("bad magic")
    version, h, w, c, n_layers = struct.unpack_from("<IIIII", data, 4)
    if version != WEIGHTS_VERSION:
        raise MalformedWeights(f"unsupported version {version}")
    if n_layers < 1 or min(h, w, c) < 1:
        raise MalformedWeights("empty network or degenerate input shape")
    offset = 24
    layers = []
    prev_width = h * w * c
    for i in range(n_layers):
        if offset + 9 > len(data):
            raise MalformedWeights(f"truncated header for layer {i}")
        rows, cols, act = struct.unpack_from("<IIB", data, offset)
        offset += 9
        if act not in _ACTIVATION_NAMES:
            raise MalformedWeights(f"unknown activation tag {act}")
        if cols != prev_width:
            raise MalformedWeights(
                f"layer {i} expects {cols} inputs, previous width is {prev_width}"
            )
        nbytes = 4 * rows * (cols + 1)
        if offset + nbytes > len(data):
            raise MalformedWeights(f"truncated payload for layer {i}")
        wmat = np.frombuffer(data, dtype="<f4", count=rows * cols, offset=offset)
        offset += 4 * rows * cols
        bias = np.frombuffer(data, dtype="<f4", count=rows, offset=offset)
        offset += 4 * rows
        layers.append(MlpLayer(wmat.reshape(rows, cols).copy(), bias.copy(),
                               _ACTIVATION_NAMES[act]))
        prev_width = rows
    if offset != len(data):
        raise MalformedWeights("trailing bytes after final layer")
    return MlpWeights(input_shape=(h, w, c), layers=tuple(layers))


def mlp_forward(weights: MlpWeights, values: np.ndarray) -> np.ndarray:
    """Forward pass in float64; input clipped to [0, 1] first."""
    a = np.clip(np.asarray(values, dtype=np.float64).reshape(-1), 0.0, 1.0)
    for layer in weights.layers:
        a = layer.weights.astype(np.float64) @ a + layer.bias.astype(np.float64)
        if layer.activation == "relu":
            a = np.maximum(a, 0.0)
    return a


class MlpOracle:
    """Small feedforward classifier; argmax with lowest-index tie-break."""

    def __init__(self, weights: MlpWeights):
        self.weights = weights
        self.input_shape = weights.input_shape
        self.num_classes = weights.num_classes

    @classmethod
    def from_file(cls, path) -> "MlpOracle":
        return cls(read_weights(path))

    def classify(self, x: Sample) -> int:
        _check_shape(x, self.input_shape)
        logits = mlp_forward(self.weights, x.values)
        return int(np.argmax(logits))


class RemoteOracle:
    """HTTP client for a served classifier (POST /classify, PROTOCOL.md).

    One session (connection pool) per instance, i.e. per attack run.
    """

    def __init__(self, endpoint: str, input_shape: Shape, num_classes: int,
                 timeout: float = 10.0):
        self.endpoint = endpoint.rstrip("/")
        self.input_shape = input_shape
        self.num_classes = num_classes
        self.timeout = timeout
        self._session = requests.Session()

    @classmethod
    def connect(cls, endpoint: str, timeout: float = 10.0) -> "RemoteOracle":
        """Discover shape and class count from the server's health endpoint."""
        try:
            resp = requests.get(endpoint.rstrip("/") + "/health", timeout=timeout)
        except requests.RequestException as exc:
            raise TransportError(f"health check failed: {exc}") from exc
        try:
            body = resp.json()
            shape = tuple(int(v) for v in body["shape"])
            classes = int(body["classes"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolViolation(f"malformed health response: {resp.text!r}") from exc
        if len(shape) != 3:
            raise ProtocolViolation(f"health shape {shape} is not (h, w, c)")
        return cls(endpoint, shape, classes, timeout=timeout)

    def classify(self, x: Sample) -> int:
        _check_shape(x, self.input_shape)
        payload = {"sample": x.values.tolist(), "shape": list(x.shape)}
        try:
            resp = self._session.post(self.endpoint + "/classify", json=payload,
                                      timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"classify request failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProtocolViolation(
                f"server answered {resp.status_code}: {resp.text[:200]!r}"
            )
        try:
            label = resp.json()["label"]
        except (ValueError, KeyError) as exc:
            raise ProtocolViolation(f"malformed classify response: {resp.text[:200]!r}") from exc
        if not isinstance(label, int) or isinstance(label, bool):
            raise ProtocolViolation(f"label field is not an integer: {label!r}")
        return label

    def close(self) -> None:
        self._session.close()


def squeeze_values(values: np.ndarray, bits: int) -> np.ndarray:
    """Clip to [0, 1] and round-half-up each pixel onto the 2^bits-level grid."""
    if not 1 <= bits <= 8:
        raise ValueError("bits must lie in [1, 8]")
    levels = (1 << bits) - 1
    clipped = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(clipped * levels + 0.5) / levels


class SqueezeWrapper:
    """Bit-depth-reduction defense: quantize the input, then delegate."""

    def __init__(self, inner, bits: int):
        if not 1 <= bits <= 8:
            raise ValueError("bits must lie in [1, 8]")
        self.inner = inner
        self.bits = bits
        self.input_shape = inner.input_shape
        self.num_classes = inner.num_classes

    def classify(self, x: Sample) -> int:
        squeezed = Sample(squeeze_values(x.values, self.bits), x.shape)
        return self.inner.classify(squeezed)
