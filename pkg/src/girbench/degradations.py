"""The ten basic degradation operators.

Each operator is a pure function of (image, params) plus an explicit RngStream
when stochastic. Identical inputs and seed give bit-identical outputs. Haze and
snow additionally take a per-pixel depth map (see pipeline.synth_depth for the
procedural fallback).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy import ndimage, special

from . import jpeg
from .errors import ImageTooSmall, InvalidParam
from .imaging import (
    DepthMap,
    ImageF32,
    Kernel2D,
    as_image,
    check_depth,
    clamp01,
    convolve2d,
    correlate_raw,
    resample,
)
from .rng import RngStream


class DegradationKind(enum.Enum):
    RESIZE = "resize"
    BLUR = "blur"
    NOISE = "noise"
    COMPRESSION = "compression"
    RINGING = "ringing"
    ALG_ARTIFACT = "alg_artifact"
    DAMAGE = "damage"
    RAIN = "rain"
    HAZE = "haze"
    SNOW = "snow"

    @property
    def weather_only_first(self) -> bool:
        """Acquisition-time degradations may only open a chain."""
        return self in (DegradationKind.RAIN, DegradationKind.HAZE, DegradationKind.SNOW)


WEATHER_KINDS = frozenset(k for k in DegradationKind if k.weather_only_first)


def _check_odd(name, v):
    if not isinstance(v, (int, np.integer)) or v < 1 or v % 2 == 0:
        raise InvalidParam(f"{name} must be a positive odd integer, got {v!r}")


@dataclass(frozen=True)
class ResizeParams:
    scale: int = 4
    filter_down: str = "bicubic"
    filter_up: str = "bicubic"

    def __post_init__(self):
        if self.scale != 4 or self.filter_down != "bicubic" or self.filter_up != "bicubic":
            raise InvalidParam("resize is fixed at scale 4 with bicubic filters")


@dataclass(frozen=True)
class BlurParams:
    ksize: int
    sigma: float

    def __post_init__(self):
        _check_odd("ksize", self.ksize)
        if not self.sigma > 0:
            raise InvalidParam(f"sigma must be > 0, got {self.sigma!r}")


@dataclass(frozen=True)
class NoiseParams:
    sigma255: float

    def __post_init__(self):
        if self.sigma255 < 0:
            raise InvalidParam(f"sigma255 must be >= 0, got {self.sigma255!r}")


@dataclass(frozen=True)
class CompressionParams:
    quality: int

    def __post_init__(self):
        if not isinstance(self.quality, (int, np.integer)) or not 1 <= self.quality <= 100:
            raise InvalidParam(f"quality must be an integer in [1, 100], got {self.quality!r}")


@dataclass(frozen=True)
class RingingParams:
    ksize: int
    omega: float

    def __post_init__(self):
        _check_odd("ksize", self.ksize)
        if not 0 < self.omega <= math.pi:
            raise InvalidParam(f"omega must be in (0, pi], got {self.omega!r}")


@dataclass(frozen=True)
class AlgArtifactParams:
    psf_sigma: float
    iterations: int

    def __post_init__(self):
        if not self.psf_sigma > 0:
            raise InvalidParam(f"psf_sigma must be > 0, got {self.psf_sigma!r}")
        if not isinstance(self.iterations, (int, np.integer)) or self.iterations < 1:
            raise InvalidParam(f"iterations must be an integer >= 1, got {self.iterations!r}")


@dataclass(frozen=True)
class DamageParams:
    n_lines: int
    thickness: int
    color: str

    def __post_init__(self):
        if not isinstance(self.n_lines, (int, np.integer)) or self.n_lines < 0:
            raise InvalidParam(f"n_lines must be an integer >= 0, got {self.n_lines!r}")
        if not isinstance(self.thickness, (int, np.integer)) or self.thickness < 1:
            raise InvalidParam(f"thickness must be an integer >= 1, got {self.thickness!r}")
        if self.color not in ("white", "black"):
            raise InvalidParam(f"color must be 'white' or 'black', got {self.color!r}")


@dataclass(frozen=True)
class RainParams:
    strength: float

    def __post_init__(self):
        if self.strength < 0:
            raise InvalidParam(f"strength must be >= 0, got {self.strength!r}")


@dataclass(frozen=True)
class HazeParams:
    A: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.A <= 1.0 or self.beta < 0:
            raise InvalidParam(f"haze requires A in [0, 1] and beta >= 0, got {self!r}")


@dataclass(frozen=True)
class SnowParams:
    A: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.A <= 1.0 or self.beta < 0:
            raise InvalidParam(f"snow requires A in [0, 1] and beta >= 0, got {self!r}")


PARAM_TYPES = {
    DegradationKind.RESIZE: ResizeParams,
    DegradationKind.BLUR: BlurParams,
    DegradationKind.NOISE: NoiseParams,
    DegradationKind.COMPRESSION: CompressionParams,
    DegradationKind.RINGING: RingingParams,
    DegradationKind.ALG_ARTIFACT: AlgArtifactParams,
    DegradationKind.DAMAGE: DamageParams,
    DegradationKind.RAIN: RainParams,
    DegradationKind.HAZE: HazeParams,
    DegradationKind.SNOW: SnowParams,
}


# ----------------------------------------------------------------------------
# Kernels


def _offsets(ksize: int):
    r = ksize // 2
    y, x = np.mgrid[-r : r + 1, -r : r + 1]
    return x.astype(np.float64), y.astype(np.float64)


def gaussian_kernel(ksize: int, sigma: float) -> Kernel2D:
    _check_odd("ksize", ksize)
    if not sigma > 0:
        raise InvalidParam(f"sigma must be > 0, got {sigma!r}")
    x, y = _offsets(ksize)
    w = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    return Kernel2D(ksize, w / w.sum())


def sinc_kernel(ksize: int, omega: float) -> Kernel2D:
    """Circular ideal low-pass: k(x,y) = omega/(2*pi*r) * J1(omega*r)."""
    _check_odd("ksize", ksize)
    if not 0 < omega <= math.pi:
        raise InvalidParam(f"omega must be in (0, pi], got {omega!r}")
    x, y = _offsets(ksize)
    r = np.hypot(x, y)
    w = np.empty_like(r)
    nz = r > 0
    w[nz] = omega / (2.0 * np.pi * r[nz]) * special.j1(omega * r[nz])
    w[~nz] = omega * omega / (4.0 * np.pi)  # r -> 0 limit
    return Kernel2D(ksize, w / w.sum())


# ----------------------------------------------------------------------------
# Operators


def degrade_blur(img: ImageF32, params: BlurParams) -> ImageF32:
    return convolve2d(img, gaussian_kernel(params.ksize, params.sigma))


def degrade_ringing(img: ImageF32, params: RingingParams) -> ImageF32:
    return convolve2d(img, sinc_kernel(params.ksize, params.omega))


def degrade_resize(img: ImageF32, params: ResizeParams) -> ImageF32:
    img = as_image(img)
    h, w = img.shape[:2]
    if h < params.scale or w < params.scale:
        raise ImageTooSmall(f"image {w}x{h} too small for {params.scale}x resize")
    small = resample(img, w // params.scale, h // params.scale, params.filter_down)
    return resample(small, w, h, params.filter_up)


def degrade_noise(img: ImageF32, params: NoiseParams, rng: RngStream) -> ImageF32:
    img = as_image(img)
    if params.sigma255 == 0:
        return img
    noise = rng.normal(params.sigma255 / 255.0, size=img.shape)
    return clamp01(img.astype(np.float64) + noise).astype(np.float32)


def degrade_jpeg(img: ImageF32, params: CompressionParams) -> ImageF32:
    return jpeg.decode_jpeg(jpeg.encode_jpeg(img, params.quality))


def degrade_alg_artifact(img: ImageF32, params: AlgArtifactParams) -> ImageF32:
    """Richardson-Lucy deconvolution treating the input as the observation."""
    img = as_image(img)
    ksize = 2 * math.ceil(3.0 * params.psf_sigma) + 1
    psf = gaussian_kernel(ksize, params.psf_sigma)
    if psf.size == 1:
        return img
    p = psf.weights
    p_flip = p[::-1, ::-1]
    obs = img.astype(np.float64)
    u = obs.copy()
    for _ in range(params.iterations):
        conv = np.maximum(correlate_raw(u, p), 1e-6)
        u = u * correlate_raw(obs / conv, p_flip)
    return clamp01(u).astype(np.float32)


def degrade_damage(img: ImageF32, params: DamageParams, rng: RngStream) -> ImageF32:
    img = as_image(img)
    if params.n_lines == 0:
        return img
    h, w = img.shape[:2]
    x0 = rng.uniform(0.0, w - 1.0, size=params.n_lines)
    y0 = rng.uniform(0.0, h - 1.0, size=params.n_lines)
    x1 = rng.uniform(0.0, w - 1.0, size=params.n_lines)
    y1 = rng.uniform(0.0, h - 1.0, size=params.n_lines)
    yy, xx = np.mgrid[0:h, 0:w]
    mask = np.zeros((h, w), dtype=bool)
    half = params.thickness / 2.0
    for i in range(params.n_lines):
        dx, dy = x1[i] - x0[i], y1[i] - y0[i]
        length2 = dx * dx + dy * dy
        if length2 == 0:
            dist2 = (xx - x0[i]) ** 2 + (yy - y0[i]) ** 2
        else:
            t = np.clip(((xx - x0[i]) * dx + (yy - y0[i]) * dy) / length2, 0.0, 1.0)
            dist2 = (xx - (x0[i] + t * dx)) ** 2 + (yy - (y0[i] + t * dy)) ** 2
        mask |= dist2 <= half * half
    out = img.copy()
    out[mask] = 1.0 if params.color == "white" else 0.0
    return out


def _motion_kernel(length: int, angle_deg: float) -> np.ndarray:
    """Unit-sum line kernel of the given pixel length and direction."""
    n = length if length % 2 == 1 else length + 1
    cx, cy = math.cos(math.radians(angle_deg)), math.sin(math.radians(angle_deg))
    x, y = _offsets(n)
    proj = x * cx + y * cy
    perp = np.abs(x * cy - y * cx)
    w = ((perp <= 0.5) & (np.abs(proj) <= length / 2.0)).astype(np.float64)
    return w / w.sum()


def degrade_rain(img: ImageF32, params: RainParams, rng: RngStream) -> ImageF32:
    img = as_image(img)
    density = (params.strength / 100.0) * 0.025
    length = int(round(params.strength / 5.0))
    if density <= 0 or length < 1:
        return img
    h, w = img.shape[:2]
    angle = float(rng.uniform(60.0, 120.0))
    seeds = (rng.uniform(size=(h, w)) < density).astype(np.float64)
    streak = ndimage.correlate(seeds, _motion_kernel(length, angle), mode="mirror")
    peak = streak.max()
    if peak > 0:
        streak /= peak  # contrast stretch to [0, 1]
    out = 1.0 - (1.0 - img.astype(np.float64)) * (1.0 - streak[:, :, None] * 0.8)
    return clamp01(out).astype(np.float32)


def degrade_haze(img: ImageF32, depth: DepthMap, params: HazeParams) -> ImageF32:
    img = as_image(img)
    depth = check_depth(img, depth)
    t = np.exp(-params.beta * depth)[:, :, None]
    out = img.astype(np.float64) * t + params.A * (1.0 - t)
    return clamp01(out).astype(np.float32)


_SNOW_COLOR = np.array([0.95, 0.97, 1.0])
_FLAKES_PER_MEGAPIXEL = 200.0


def degrade_snow(
    img: ImageF32,
    depth: DepthMap,
    params: SnowParams,
    rng: RngStream,
    flake_count: int | None = None,
) -> ImageF32:
    img = as_image(img)
    check_depth(img, depth)
    h, w = img.shape[:2]
    if flake_count is None:
        flake_count = int(round(_FLAKES_PER_MEGAPIXEL * h * w / 1e6))
    if flake_count > 0:
        cx = rng.uniform(0.0, w - 1.0, size=flake_count)
        cy = rng.uniform(0.0, h - 1.0, size=flake_count)
        radius = rng.uniform(1.0, 4.0, size=flake_count)
        z = rng.uniform(0.6, 1.0, size=flake_count)
        yy, xx = np.mgrid[0:h, 0:w]
        zr = np.zeros((h, w), dtype=np.float64)
        for i in range(flake_count):
            # sigma chosen so the 0.5-threshold disc has the drawn radius
            sigma = radius[i] / math.sqrt(2.0 * math.log(2.0))
            blob = np.exp(-((xx - cx[i]) ** 2 + (yy - cy[i]) ** 2) / (2.0 * sigma * sigma))
            np.maximum(zr, np.where(blob >= 0.5, z[i], 0.0), out=zr)
        snowy = img.astype(np.float64) * (1.0 - zr[:, :, None]) + _SNOW_COLOR * zr[:, :, None]
        img = clamp01(snowy).astype(np.float32)
    return degrade_haze(img, depth, HazeParams(params.A, params.beta))


# ----------------------------------------------------------------------------
# Parameter binding


def representative_params(kind: DegradationKind):
    """The fixed parameter set used by the single and representative tasks."""
    return {
        DegradationKind.RESIZE: ResizeParams(),
        DegradationKind.BLUR: BlurParams(ksize=15, sigma=2.0),
        DegradationKind.NOISE: NoiseParams(sigma255=20.0),
        DegradationKind.COMPRESSION: CompressionParams(quality=50),
        DegradationKind.RINGING: RingingParams(ksize=15, omega=1.2),
        DegradationKind.ALG_ARTIFACT: AlgArtifactParams(psf_sigma=1.5, iterations=10),
        DegradationKind.DAMAGE: DamageParams(n_lines=10, thickness=7, color="white"),
        DegradationKind.RAIN: RainParams(strength=75.0),
        DegradationKind.HAZE: HazeParams(A=0.9, beta=1.8),
        DegradationKind.SNOW: SnowParams(A=0.9, beta=0.75),
    }[kind]


def sample_params(kind: DegradationKind, rng: RngStream):
    """Uniform draw within each field's sampling range."""
    if kind is DegradationKind.RESIZE:
        return ResizeParams()
    if kind is DegradationKind.BLUR:
        return BlurParams(
            ksize=7 + 2 * int(rng.integers(0, 8)),
            sigma=float(rng.uniform(0.2, 3.0)),
        )
    if kind is DegradationKind.NOISE:
        return NoiseParams(sigma255=float(rng.uniform(1.0, 30.0)))
    if kind is DegradationKind.COMPRESSION:
        return CompressionParams(quality=int(rng.integers(30, 95)))
    if kind is DegradationKind.RINGING:
        return RingingParams(
            ksize=7 + 2 * int(rng.integers(0, 8)),
            omega=float(rng.uniform(math.pi / 3.0, math.pi)),
        )
    if kind is DegradationKind.ALG_ARTIFACT:
        return AlgArtifactParams(
            psf_sigma=float(rng.uniform(0.8, 2.0)),
            iterations=int(rng.integers(5, 30)),
        )
    if kind is DegradationKind.DAMAGE:
        return DamageParams(
            n_lines=int(rng.integers(5, 10)),
            thickness=int(rng.integers(5, 10)),
            color="white" if int(rng.integers(0, 1)) == 0 else "black",
        )
    if kind is DegradationKind.RAIN:
        return RainParams(strength=float(rng.uniform(50.0, 100.0)))
    if kind is DegradationKind.HAZE:
        return HazeParams(A=float(rng.uniform(0.8, 1.0)), beta=float(rng.uniform(0.5, 2.5)))
    if kind is DegradationKind.SNOW:
        return SnowParams(A=float(rng.uniform(0.8, 0.95)), beta=float(rng.uniform(0.5, 1.0)))
    raise InvalidParam(f"unknown degradation kind {kind!r}")


def params_to_dict(params) -> dict:
    return {f.name: getattr(params, f.name) for f in fields(params)}


def params_from_dict(kind: DegradationKind, d: dict):
    cls = PARAM_TYPES[kind]
    allowed = {f.name for f in fields(cls)}
    unknown = set(d) - allowed
    if unknown:
        raise InvalidParam(f"unknown {kind.value} parameter(s): {sorted(unknown)}")
    try:
        return cls(**d)
    except TypeError as e:
        raise InvalidParam(f"bad parameters for {kind.value}: {e}") from e
