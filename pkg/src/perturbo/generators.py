"""Perturbation generators: low-dimensional points to image-sized noise.

Each generator is a pure function S mapping a point in the normalized
[0, 1]^d' box to a full-size perturbation in [-1, 1]^d, shrinking the
search space the optimizer has to cover. Three families:

* procedural noise: Perlin (d'=3) and Gabor (d'=4),
* interpolation upsamplers: bilinear and bicubic (d'=48, a 4x4x3 grid),
* assignment upsamplers: nearest-neighbor and block clustering (d'=48).

Determinism is part of the contract: identical (spec, point) pairs give
bit-identical outputs, so the only randomness (Gabor kernel placement)
is driven by a seed stored on the spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LowDimPoint, Shape
from .errors import DimensionMismatch, InvalidParams

UPSAMPLER_KINDS = ("bilinear", "bicubic", "nearest", "cluster")
GENERATOR_KINDS = ("perlin", "gabor") + UPSAMPLER_KINDS

PERLIN_WAVELENGTH_RANGE = (2.0, 180.0)
PERLIN_SINE_FREQ_RANGE = (4.0, 32.0)
GABOR_ORIENTATION_RANGE = (0.0, math.pi)
GABOR_FREQUENCY_RANGE = (1.0 / 30.0, 0.5)
GABOR_BANDWIDTH_RANGE = (1.0, 8.0)
GABOR_ISOTROPY_RANGE = (0.5, 2.0)

# Upsampler grid factorization of the 48-dim input.
GRID_H, GRID_W, GRID_C = 4, 4, 3


@dataclass(frozen=True)
class Perturbation:
    """Image-sized noise in [-1, 1]^d, flat with shape metadata."""

    values: np.ndarray
    shape: Shape

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64).reshape(-1)
        h, w, c = self.shape
        if arr.size != h * w * c:
            raise DimensionMismatch(
                f"perturbation length {arr.size} does not match shape {self.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite perturbation values")
        if arr.min() < -1.0 - 1e-12 or arr.max() > 1.0 + 1e-12:
            raise ValueError("perturbation values outside [-1, 1]")
        if np.all(arr == 0.0):
            raise ValueError("perturbation is identically zero")
        object.__setattr__(self, "values", arr)

    def as_image(self) -> np.ndarray:
        return self.values.reshape(self.shape)


# ---------------------------------------------------------------------------
# Perlin gradient-lattice noise
# ---------------------------------------------------------------------------

# Ken Perlin's reference permutation table (public domain), doubled so
# index arithmetic never wraps.
_PERM_BASE = np.array([
    151, 160, 137, 91, 90, 15, 131, 13, 201, 95, 96, 53, 194, 233, 7, 225,
    140, 36, 103, 30, 69, 142, 8, 99, 37, 240, 21, 10, 23, 190, 6, 148,
    247, 120, 234, 75, 0, 26, 197, 62, 94, 252, 219, 203, 117, 35, 11, 32,
    57, 177, 33, 88, 237, 149, 56, 87, 174, 20, 125, 136, 171, 168, 68, 175,
    74, 165, 71, 134, 139, 48, 27, 166, 77, 146, 158, 231, 83, 111, 229, 122,
    60, 211, 133, 230, 220, 105, 92, 41, 55, 46, 245, 40, 244, 102, 143, 54,
    65, 25, 63, 161, 1, 216, 80, 73, 209, 76, 132, 187, 208, 89, 18, 169,
    200, 196, 135, 130, 116, 188, 159, 86, 164, 100, 109, 198, 173, 186, 3, 64,
    52, 217, 226, 250, 124, 123, 5, 202, 38, 147, 118, 126, 255, 82, 85, 212,
    207, 206, 59, 227, 47, 16, 58, 17, 182, 189, 28, 42, 223, 183, 170, 213,
    119, 248, 152, 2, 44, 154, 163, 70, 221, 153, 101, 155, 167, 43, 172, 9,
    129, 22, 39, 253, 19, 98, 108, 110, 79, 113, 224, 232, 178, 185, 112, 104,
    218, 246, 97, 228, 251, 34, 242, 193, 238, 210, 144, 12, 191, 179, 162, 241,
    81, 51, 145, 235, 249, 14, 239, 107, 49, 192, 214, 31, 181, 199, 106, 157,
    184, 84, 204, 176, 115, 121, 50, 45, 127, 4, 150, 254, 138, 236, 205, 93,
    222, 114, 67, 29, 24, 72, 243, 141, 128, 195, 78, 66, 215, 61, 156, 180,
], dtype=np.int64)
_PERM = np.concatenate([_PERM_BASE, _PERM_BASE])

_SQ2 = math.sqrt(0.5)
_GRAD2 = np.array([
    (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0),
    (_SQ2, _SQ2), (-_SQ2, _SQ2), (_SQ2, -_SQ2), (-_SQ2, -_SQ2),
])


def _fade(t):
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def _corner_grad(ix, iy):
    idx = _PERM[(_PERM[ix & 255] + (iy & 255)) & 255] & 7
    return _GRAD2[idx]


def gradient_noise_2d(u, v):
    """Classic gradient-lattice Perlin noise, vectorized over (u, v) arrays.

    Vanishes exactly at integer lattice coordinates.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    iu = np.floor(u).astype(np.int64)
    iv = np.floor(v).astype(np.int64)
    fu = u - iu
    fv = v - iv

    g00 = _corner_grad(iu, iv)
    g10 = _corner_grad(iu + 1, iv)
    g01 = _corner_grad(iu, iv + 1)
    g11 = _corner_grad(iu + 1, iv + 1)

    n00 = g00[..., 0] * fu + g00[..., 1] * fv
    n10 = g10[..., 0] * (fu - 1.0) + g10[..., 1] * fv
    n01 = g01[..., 0] * fu + g01[..., 1] * (fv - 1.0)
    n11 = g11[..., 0] * (fu - 1.0) + g11[..., 1] * (fv - 1.0)

    su = _fade(fu)
    sv = _fade(fv)
    nx0 = n00 + su * (n10 - n00)
    nx1 = n01 + su * (n11 - n01)
    return nx0 + sv * (nx1 - nx0)


def perlin(wavelength_x: float, wavelength_y: float, sine_freq: float, shape: Shape) -> Perturbation:
    """Perlin lattice noise pushed through the sine color map.

    The base field n(x/wavelength_x, y/wavelength_y) is mapped to
    sin(2*pi*sine_freq*n) and replicated across channels, so the output
    lands in [-1, 1] by construction.
    """
    lo, hi = PERLIN_WAVELENGTH_RANGE
    if not (lo <= wavelength_x <= hi and lo <= wavelength_y <= hi):
        raise InvalidParams(f"wavelengths must lie in [{lo}, {hi}]")
    flo, fhi = PERLIN_SINE_FREQ_RANGE
    if not flo <= sine_freq <= fhi:
        raise InvalidParams(f"sine frequency must lie in [{flo}, {fhi}]")
    h, w, c = shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    noise = gradient_noise_2d(xs / wavelength_x, ys / wavelength_y)
    colored = np.sin(2.0 * math.pi * sine_freq * noise)
    img = np.repeat(colored[:, :, None], c, axis=2)
    return Perturbation(img.reshape(-1), shape)


# ---------------------------------------------------------------------------
# Gabor sparse-convolution noise
# ---------------------------------------------------------------------------

def gabor_kernel(orientation: float, frequency: float, bandwidth: float,
                 isotropy: float) -> np.ndarray:
    """A single Gabor kernel: Gaussian envelope times an oriented cosine.

    Support is truncated at a 3*bandwidth radius.
    """
    radius = int(math.ceil(3.0 * bandwidth))
    ys, xs = np.mgrid[-radius:radius + 1, -radius:radius + 1].astype(np.float64)
    xr = xs * math.cos(orientation) + ys * math.sin(orientation)
    yr = -xs * math.sin(orientation) + ys * math.cos(orientation)
    envelope = np.exp(-(xr ** 2 + (isotropy * yr) ** 2) / (2.0 * bandwidth ** 2))
    return envelope * np.cos(2.0 * math.pi * frequency * xr)


def gabor_field(positions, weights, kernel: np.ndarray, shape: Shape) -> np.ndarray:
    """Accumulate weighted kernel copies at the given (row, col) positions.

    Positions may be fractional; kernels are stamped at the nearest pixel.
    Returns the raw (h, w) field before normalization.
    """
    if len(positions) != len(weights):
        raise InvalidParams("positions and weights must pair up")
    if len(positions) < 1:
        raise InvalidParams("at least one kernel must be placed")
    h, w, _ = shape
    radius = kernel.shape[0] // 2
    canvas = np.zeros((h + 2 * radius, w + 2 * radius))
    for (py, px), wt in zip(positions, weights):
        iy = int(round(py))
        ix = int(round(px))
        if not (0 <= iy < h and 0 <= ix < w):
            raise InvalidParams(f"kernel position ({py}, {px}) outside the image")
        canvas[iy:iy + 2 * radius + 1, ix:ix + 2 * radius + 1] += wt * kernel
    return canvas[radius:radius + h, radius:radius + w]


# One jittered kernel per cell of this size (pixels).
_GABOR_CELL = 8


def gabor(orientation: float, frequency: float, bandwidth: float, isotropy: float,
          shape: Shape, seed: int) -> Perturbation:
    """Sparse-convolution Gabor noise, normalized to [-1, 1].

    Kernel positions and weights come from the seed, never from global
    RNG state, so the generator stays a pure function.
    """
    olo, ohi = GABOR_ORIENTATION_RANGE
    if not olo <= orientation <= ohi:
        raise InvalidParams(f"orientation must lie in [{olo}, {ohi}]")
    flo, fhi = GABOR_FREQUENCY_RANGE
    if not flo <= frequency <= fhi:
        raise InvalidParams(f"frequency must lie in [{flo:.4f}, {fhi}]")
    blo, bhi = GABOR_BANDWIDTH_RANGE
    if not blo <= bandwidth <= bhi:
        raise InvalidParams(f"bandwidth must lie in [{blo}, {bhi}]")
    if isotropy <= 0.0:
        raise InvalidParams("isotropy must be positive")

    h, w, c = shape
    rng = np.random.default_rng(seed)
    positions = []
    weights = []
    for cy in range(max(1, h // _GABOR_CELL)):
        for cx in range(max(1, w // _GABOR_CELL)):
            py = min(cy * _GABOR_CELL + rng.uniform(0.0, _GABOR_CELL), h - 1)
            px = min(cx * _GABOR_CELL + rng.uniform(0.0, _GABOR_CELL), w - 1)
            positions.append((py, px))
            weights.append(rng.uniform(-1.0, 1.0))

    kernel = gabor_kernel(orientation, frequency, bandwidth, isotropy)
    field = gabor_field(positions, weights, kernel, shape)
    peak = np.max(np.abs(field))
    if peak < 1e-12:
        raise InvalidParams("degenerate gabor field (all kernel weights cancelled)")
    img = np.repeat((field / peak)[:, :, None], c, axis=2)
    return Perturbation(img.reshape(-1), shape)


# ---------------------------------------------------------------------------
# Grid upsamplers
# ---------------------------------------------------------------------------

def _align_corners_coords(n_out: int, n_in: int) -> np.ndarray:
    if n_out == 1:
        return np.zeros(1)
    return np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)


def _linear_weights(n_out: int, n_in: int) -> np.ndarray:
    """(n_out, n_in) bilinear weight matrix with align-corners sampling."""
    w = np.zeros((n_out, n_in))
    if n_in == 1:
        w[:, 0] = 1.0
        return w
    src = _align_corners_coords(n_out, n_in)
    i0 = np.clip(np.floor(src).astype(int), 0, n_in - 2)
    frac = src - i0
    w[np.arange(n_out), i0] = 1.0 - frac
    w[np.arange(n_out), i0 + 1] += frac
    return w


def _cubic_kernel(s: np.ndarray) -> np.ndarray:
    # Keys cubic convolution kernel, a = -0.5; reproduces constants exactly.
    a = -0.5
    s = np.abs(s)
    out = np.zeros_like(s)
    near = s <= 1.0
    far = (s > 1.0) & (s < 2.0)
    out[near] = (a + 2.0) * s[near] ** 3 - (a + 3.0) * s[near] ** 2 + 1.0
    out[far] = a * s[far] ** 3 - 5.0 * a * s[far] ** 2 + 8.0 * a * s[far] - 4.0 * a
    return out


def _cubic_weights(n_out: int, n_in: int) -> np.ndarray:
    """(n_out, n_in) bicubic weight matrix, replicate-padded at the edges."""
    w = np.zeros((n_out, n_in))
    if n_in == 1:
        w[:, 0] = 1.0
        return w
    src = _align_corners_coords(n_out, n_in)
    base = np.floor(src).astype(int)
    for offset in (-1, 0, 1, 2):
        idx = base + offset
        weight = _cubic_kernel(src - idx)
        np.add.at(w, (np.arange(n_out), np.clip(idx, 0, n_in - 1)), weight)
    return w


def _nearest_index(n_out: int, n_in: int) -> np.ndarray:
    src = _align_corners_coords(n_out, n_in)
    return np.clip(np.floor(src + 0.5).astype(int), 0, n_in - 1)


def _block_index(n_out: int, n_in: int) -> np.ndarray:
    return np.minimum(np.arange(n_out) * n_in // n_out, n_in - 1)


def upsample(method: str, grid: np.ndarray, shape: Shape) -> Perturbation:
    """Upsample a coarse (gh, gw, c) grid to an image-sized perturbation.

    bilinear/bicubic use align-corners interpolation (corner grid values
    reproduced exactly); nearest assigns the closest grid cell; cluster
    tiles the target into gh*gw equal blocks per channel.
    """
    if method not in UPSAMPLER_KINDS:
        raise InvalidParams(f"unknown upsampling method {method!r}")
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 3:
        raise DimensionMismatch("grid must be (rows, cols, channels)")
    if not np.all(np.isfinite(grid)):
        raise InvalidParams("grid values must be finite")
    if grid.min() < -1.0 or grid.max() > 1.0:
        raise InvalidParams("grid values must lie in [-1, 1]")
    h, w, c = shape
    gh, gw, gc = grid.shape
    # Grayscale or odd channel counts reuse grid channels cyclically.
    channels = np.arange(c) % gc

    if method == "bilinear":
        wr, wc = _linear_weights(h, gh), _linear_weights(w, gw)
        img = np.einsum("hi,wj,ijc->hwc", wr, wc, grid[:, :, channels])
    elif method == "bicubic":
        wr, wc = _cubic_weights(h, gh), _cubic_weights(w, gw)
        img = np.clip(np.einsum("hi,wj,ijc->hwc", wr, wc, grid[:, :, channels]), -1.0, 1.0)
    elif method == "nearest":
        img = grid[np.ix_(_nearest_index(h, gh), _nearest_index(w, gw), channels)]
    else:
        img = grid[np.ix_(_block_index(h, gh), _block_index(w, gw), channels)]
    return Perturbation(img.reshape(-1), shape)


# ---------------------------------------------------------------------------
# Spec + dispatch
# ---------------------------------------------------------------------------

_EXPECTED_DIM = {"perlin": 3, "gabor": 4}
for _k in UPSAMPLER_KINDS:
    _EXPECTED_DIM[_k] = GRID_H * GRID_W * GRID_C


@dataclass(frozen=True)
class GeneratorSpec:
    """Which generator family to use and how [0,1] box coords map to it.

    ``param_ranges`` holds one (min, max, scale) triple per input
    coordinate; scale is "linear" or "log" (log-linear for wavelengths).
    ``seed`` only matters for Gabor kernel placement.
    """

    kind: str
    d_in: int
    target_shape: Shape
    param_ranges: tuple
    seed: int = 0

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise InvalidParams(f"unknown generator kind {self.kind!r}")
        if self.d_in != _EXPECTED_DIM[self.kind]:
            raise DimensionMismatch(
                f"{self.kind} expects d'={_EXPECTED_DIM[self.kind]}, got {self.d_in}"
            )
        if len(self.param_ranges) != self.d_in:
            raise InvalidParams("one (min, max, scale) range needed per coordinate")
        for lo, hi, scale in self.param_ranges:
            if not lo < hi:
                raise InvalidParams(f"range ({lo}, {hi}) needs min < max")
            if scale not in ("linear", "log"):
                raise InvalidParams(f"unknown range scale {scale!r}")

    @classmethod
    def make(cls, kind: str, target_shape: Shape, seed: int = 0) -> "GeneratorSpec":
        """Build a spec with the default coordinate mapping for ``kind``."""
        if kind == "perlin":
            lam = PERLIN_WAVELENGTH_RANGE + ("log",)
            ranges = (lam, lam, PERLIN_SINE_FREQ_RANGE + ("linear",))
        elif kind == "gabor":
            ranges = (
                GABOR_ORIENTATION_RANGE + ("linear",),
                GABOR_FREQUENCY_RANGE + ("log",),
                GABOR_BANDWIDTH_RANGE + ("log",),
                GABOR_ISOTROPY_RANGE + ("log",),
            )
        elif kind in UPSAMPLER_KINDS:
            ranges = tuple((-1.0, 1.0, "linear") for _ in range(GRID_H * GRID_W * GRID_C))
        else:
            raise InvalidParams(f"unknown generator kind {kind!r}")
        return cls(kind=kind, d_in=_EXPECTED_DIM[kind], target_shape=target_shape,
                   param_ranges=ranges, seed=seed)

    def map_params(self, point: LowDimPoint) -> np.ndarray:
        """Map normalized box coordinates to physical generator parameters."""
        if point.dim != self.d_in:
            raise DimensionMismatch(f"point has d'={point.dim}, spec wants {self.d_in}")
        out = np.empty(self.d_in)
        for i, ((lo, hi, scale), coord) in enumerate(zip(self.param_ranges, point.coords)):
            if scale == "linear":
                out[i] = lo + (hi - lo) * coord
            else:
                out[i] = math.exp(math.log(lo) + (math.log(hi) - math.log(lo)) * coord)
        return out


def generate(spec: GeneratorSpec, point: LowDimPoint) -> Perturbation:
    """Evaluate the generator S at a box point; pure and deterministic."""
    params = spec.map_params(point)
    if spec.kind == "perlin":
        return perlin(params[0], params[1], params[2], spec.target_shape)
    if spec.kind == "gabor":
        return gabor(params[0], params[1], params[2], params[3],
                     spec.target_shape, spec.seed)
    grid = params.reshape(GRID_H, GRID_W, GRID_C)
    return upsample(spec.kind, grid, spec.target_shape)
