"""Raster geometry: polar warping of square aerial views, cyclic field-of-view
crops, random reorientation, and bilinear resizing.

The polar mapping is frozen as the package's reference: output pixel (w, h)
reads the source at

    u = S/2 + (S/2) * ((H - h)/H) * sin(2*pi*w/W)
    v = S/2 - (S/2) * ((H - h)/H) * cos(2*pi*w/W)

so azimuth w=0 faces image-up (north) and increases clockwise, the radius
shrinks linearly toward the bottom rows, and out-of-range reads clamp to the
border. Sampling treats pixel i as covering [i, i+1) with its center at
i + 0.5 (the same half-pixel convention `resize` uses).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .data.rasters import Raster
from .errors import NonSquareInput

DEFAULT_FOVS = (360.0, 180.0, 90.0, 70.0)


@dataclass(frozen=True)
class PolarSpec:
    target_width: int
    target_height: int
    sampling: str = "bilinear"  # "bilinear" | "nearest"

    def __post_init__(self):
        if self.target_width < 4 or self.target_width % 4:
            raise ValueError("polar target width must be >= 4 and divisible by 4")
        if self.target_height < 2:
            raise ValueError("polar target height must be >= 2")
        if self.sampling not in ("bilinear", "nearest"):
            raise ValueError(f"unknown sampling {self.sampling!r}")


@dataclass(frozen=True)
class FovSpec:
    fov_degrees: float
    pano_width: int

    def __post_init__(self):
        if not 0.0 < self.fov_degrees <= 360.0:
            raise ValueError("fov must lie in (0, 360]")
        if self.crop_width < 1:
            raise ValueError("fov crop is narrower than one column")

    @property
    def crop_width(self) -> int:
        return int(math.floor(self.pano_width * self.fov_degrees / 360.0))


def polar_mapping(size: int, out_w: int, out_h: int):
    """Source-coordinate grids (u, v) for the reference polar mapping.

    Trig values are computed once per column with math.sin/cos so every
    backend (and any scalar oracle) sees bit-identical coordinates.
    """
    half = size / 2.0
    sin_w = np.array([math.sin(2.0 * math.pi * w / out_w) for w in range(out_w)])
    cos_w = np.array([math.cos(2.0 * math.pi * w / out_w) for w in range(out_w)])
    radius = half * (out_h - np.arange(out_h, dtype=np.float64)) / out_h
    u = half + radius[:, None] * sin_w[None, :]
    v = half - radius[:, None] * cos_w[None, :]
    return u, v


def polar_transform_values(pixels: np.ndarray, spec: PolarSpec) -> np.ndarray:
    """Float-valued polar warp of a square (S, S, C) array."""
    size = pixels.shape[0]
    if pixels.ndim != 3 or pixels.shape[1] != size:
        raise NonSquareInput(f"aerial raster must be square, got {pixels.shape[:2]}")
    if size < 2:
        raise NonSquareInput("aerial raster must be at least 2x2")
    u, v = polar_mapping(size, spec.target_width, spec.target_height)
    src = np.ascontiguousarray(pixels, dtype=np.float64)
    if spec.sampling == "nearest":
        return kernels.nearest_sample(src, u, v)
    return kernels.bilinear_sample(src, u, v)


def quantize(values: np.ndarray) -> np.ndarray:
    """Round half up and clip into uint8 range."""
    return np.clip(np.floor(values + 0.5), 0.0, 255.0).astype(np.uint8)


def polar_transform(aerial: Raster, spec: PolarSpec) -> Raster:
    """Warp a square aerial raster into an azimuth-by-radius panorama grid."""
    warped = polar_transform_values(aerial.pixels.astype(np.float64), spec)
    if spec.sampling == "nearest":
        out = warped.astype(np.uint8)  # nearest only moves pixels, values are integral
    else:
        out = quantize(warped)
    return Raster(pixels=out, role=aerial.role)


def fov_crop(pano: Raster, fov: FovSpec, start_col: int) -> Raster:
    """Cyclic crop of `crop_width` columns starting at start_col."""
    if not 0 <= start_col < pano.width:
        raise ValueError(f"start_col {start_col} outside [0, {pano.width})")
    if fov.pano_width != pano.width:
        raise ValueError("FovSpec pano_width does not match the raster")
    cols = (start_col + np.arange(fov.crop_width)) % pano.width
    return Raster(pixels=pano.pixels[:, cols], role=pano.role)


def roll_columns(pano: Raster, shift: int) -> Raster:
    """Circular shift by `shift` columns; column w of the output is column
    (w + shift) mod width of the input (same direction as fov_crop's start)."""
    shift = int(shift) % pano.width
    return Raster(pixels=np.roll(pano.pixels, -shift, axis=1), role=pano.role)


def random_roll(pano: Raster, rng: np.random.Generator):
    """Reorient a panorama by a uniform random column shift.

    Returns the rolled raster and the applied shift so tests and training
    can recover the ground-truth orientation.
    """
    shift = int(rng.integers(0, pano.width))
    return roll_columns(pano, shift), shift


def resize(raster: Raster, width: int, height: int) -> Raster:
    """Bilinear resize with half-pixel centers, rounding half up."""
    if width < 1 or height < 1:
        raise ValueError("target size must be positive")
    src_h, src_w = raster.height, raster.width
    x = (np.arange(width, dtype=np.float64) + 0.5) * (src_w / width)
    y = (np.arange(height, dtype=np.float64) + 0.5) * (src_h / height)
    u = np.broadcast_to(x[None, :], (height, width)).copy()
    v = np.broadcast_to(y[:, None], (height, width)).copy()
    values = kernels.bilinear_sample(raster.pixels.astype(np.float64), u, v)
    return Raster(pixels=quantize(values), role=raster.role)
