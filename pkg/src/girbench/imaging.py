"""Pixel buffers, color conversion, convolution, resampling, image file I/O.

Images are float32 numpy arrays of shape (H, W, 3) with samples in [0, 1].
Every public operation clamps its result back into [0, 1], so chains of
operators stay valid regardless of order. 8-bit quantization happens only at
file I/O (and inside the JPEG codec).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import CorruptStream, DimensionMismatch, InvalidParam, UnsupportedFormat

ImageF32 = np.ndarray  # (H, W, 3) float32 in [0, 1]
DepthMap = np.ndarray  # (H, W) float, finite, >= 0


def clamp01(a: np.ndarray) -> np.ndarray:
    return np.clip(a, 0.0, 1.0)


def as_image(a: np.ndarray) -> ImageF32:
    """Validate and normalize an array into the canonical image layout."""
    a = np.asarray(a, dtype=np.float32)
    if a.ndim != 3 or a.shape[2] != 3 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatch(f"expected (H, W, 3) array, got shape {a.shape}")
    return a


def check_depth(img: ImageF32, depth: DepthMap) -> np.ndarray:
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != img.shape[:2]:
        raise DimensionMismatch(
            f"depth shape {depth.shape} does not match image {img.shape[:2]}"
        )
    if not np.all(np.isfinite(depth)) or np.any(depth < 0):
        raise InvalidParam("depth values must be finite and >= 0")
    return depth


@dataclass(frozen=True)
class Kernel2D:
    """Odd-sized square convolution kernel normalized to unit sum."""

    size: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if self.size % 2 != 1 or self.size < 1:
            raise InvalidParam(f"kernel size must be odd and >= 1, got {self.size}")
        if w.shape != (self.size, self.size):
            raise InvalidParam(f"weights shape {w.shape} != ({self.size}, {self.size})")
        if abs(float(w.sum()) - 1.0) > 1e-6:
            raise InvalidParam(f"kernel weights must sum to 1, got {w.sum()!r}")
        object.__setattr__(self, "weights", w)


# ----------------------------------------------------------------------------
# File I/O


def load_image(path) -> ImageF32:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    if path.suffix.lower() in (".ppm", ".pnm"):
        return _load_ppm(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I"):
                arr = np.asarray(im, dtype=np.float64) / 65535.0
            elif mode == "L":
                arr = np.asarray(im, dtype=np.float64) / 255.0
            elif mode == "RGB":
                arr = np.asarray(im, dtype=np.float64) / 255.0
            else:
                raise UnsupportedFormat(f"unsupported image mode {mode!r} in {path}")
    except UnidentifiedImageError as e:
        raise UnsupportedFormat(f"{path}: not a recognized image file") from e
    except (OSError, SyntaxError) as e:
        raise CorruptStream(f"{path}: {e}") from e
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return as_image(arr)


def save_image(img: ImageF32, path) -> None:
    """Write an 8-bit file; PNG by default, binary PPM for .ppm paths.

    Samples quantize by round(s * 255) with ties to even.
    """
    img = as_image(img)
    q = np.round(img.astype(np.float64) * 255.0).astype(np.uint8)
    path = Path(path)
    if path.suffix.lower() in (".ppm", ".pnm"):
        with open(path, "wb") as f:
            f.write(b"P6\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
            f.write(q.tobytes())
    else:
        Image.fromarray(q, mode="RGB").save(path, format="PNG")


def _load_ppm(path: Path) -> ImageF32:
    data = path.read_bytes()
    if not data.startswith(b"P6"):
        raise UnsupportedFormat(f"{path}: not a binary PPM (P6) file")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise CorruptStream(f"{path}: truncated PPM header")
        fields.append(data[start:pos])
    try:
        width, height, maxval = (int(x) for x in fields)
    except ValueError as e:
        raise CorruptStream(f"{path}: malformed PPM header") from e
    if width < 1 or height < 1 or maxval not in (255, 65535):
        raise UnsupportedFormat(f"{path}: unsupported PPM geometry/maxval")
    pos += 1  # single whitespace after maxval
    itemsize = 1 if maxval == 255 else 2
    need = width * height * 3 * itemsize
    raw = data[pos : pos + need]
    if len(raw) != need:
        raise CorruptStream(f"{path}: truncated PPM payload")
    dtype = np.uint8 if maxval == 255 else np.dtype(">u2")
    arr = np.frombuffer(raw, dtype=dtype).reshape(height, width, 3)
    return as_image(arr.astype(np.float64) / maxval)


# ----------------------------------------------------------------------------
# Convolution


def convolve2d(img: ImageF32, k: Kernel2D) -> ImageF32:
    """Per-channel 2-D correlation with reflect-101 borders, clamped."""
    img = as_image(img)
    return clamp01(correlate_raw(img.astype(np.float64), k.weights)).astype(np.float32)


def correlate_raw(arr: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Unclamped reflect-101 correlation; used internally by iterative solvers."""
    if weights.shape == (1, 1):
        return arr * weights[0, 0]
    out = np.empty_like(arr, dtype=np.float64)
    for c in range(arr.shape[2]):
        # ndimage 'mirror' is reflect-101: the edge pixel is not duplicated
        ndimage.correlate(arr[:, :, c].astype(np.float64), weights, output=out[:, :, c], mode="mirror")
    return out


# ----------------------------------------------------------------------------
# Resampling

FILTERS = ("nearest", "bilinear", "bicubic")


def _keys_weight(x: np.ndarray) -> np.ndarray:
    # Keys bicubic kernel with a = -0.5 (Catmull-Rom)
    a = -0.5
    x = np.abs(x)
    w = np.zeros_like(x)
    m1 = x <= 1.0
    m2 = (x > 1.0) & (x < 2.0)
    w[m1] = (a + 2) * x[m1] ** 3 - (a + 3) * x[m1] ** 2 + 1
    w[m2] = a * x[m2] ** 3 - 5 * a * x[m2] ** 2 + 8 * a * x[m2] - 4 * a
    return w


def _axis_taps(n_in: int, n_out: int, filt: str):
    """(indices, weights) arrays of shape (n_out, taps) for one axis."""
    x = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    if filt == "nearest":
        idx = np.floor(x + 0.5).astype(np.int64)[:, None]
        w = np.ones((n_out, 1))
    elif filt == "bilinear":
        base = np.floor(x).astype(np.int64)
        f = x - base
        idx = base[:, None] + np.array([0, 1])
        w = np.stack([1.0 - f, f], axis=1)
    elif filt == "bicubic":
        base = np.floor(x).astype(np.int64)
        f = x - base
        offsets = np.array([-1, 0, 1, 2])
        idx = base[:, None] + offsets
        w = _keys_weight(f[:, None] - offsets)
    else:
        raise InvalidParam(f"unknown filter {filt!r}; expected one of {FILTERS}")
    return np.clip(idx, 0, n_in - 1), w


def resample(img: ImageF32, out_w: int, out_h: int, filt: str = "bicubic") -> ImageF32:
    """Separable resampling with half-pixel-center source coordinates."""
    img = as_image(img)
    if out_w < 1 or out_h < 1:
        raise InvalidParam("output dimensions must be >= 1")
    arr = img.astype(np.float64)
    idx, w = _axis_taps(arr.shape[0], out_h, filt)
    arr = np.einsum("ot,otwc->owc", w, arr[idx])
    idx, w = _axis_taps(img.shape[1], out_w, filt)
    arr = np.einsum("ot,hotc->hoc", w, arr[:, idx])
    return clamp01(arr).astype(np.float32)


# ----------------------------------------------------------------------------
# Color conversion (BT.601 full range, chroma planes offset by +0.5)

_RGB2YCC = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.299 / 1.772, -0.587 / 1.772, (1.0 - 0.114) / 1.772],
        [(1.0 - 0.299) / 1.402, -0.587 / 1.402, -0.114 / 1.402],
    ]
)
_YCC2RGB = np.linalg.inv(_RGB2YCC)


def rgb_to_ycbcr(img: ImageF32) -> ImageF32:
    img = as_image(img)
    ycc = img.astype(np.float64) @ _RGB2YCC.T
    ycc[:, :, 1:] += 0.5
    return clamp01(ycc).astype(np.float32)


def ycbcr_to_rgb(img: ImageF32) -> ImageF32:
    img = as_image(img)
    ycc = img.astype(np.float64).copy()
    ycc[:, :, 1:] -= 0.5
    return clamp01(ycc @ _YCC2RGB.T).astype(np.float32)
