"""8-bit raster type and PNG I/O.

Pixels are stored (height, width, channels) uint8, row-major and
channel-interleaved. A raster carries the role it plays in a sample;
depth rasters are single-channel, everything else is RGB.
"""

from dataclasses import dataclass

import numpy as np
from PIL import Image

RGB_ROLES = ("ground_rgb", "sat_rgb")
SEG_ROLES = ("ground_seg", "sat_seg")
DEPTH_ROLES = ("ground_depth",)
ALL_ROLES = RGB_ROLES + SEG_ROLES + DEPTH_ROLES


@dataclass
class Raster:
    pixels: np.ndarray
    role: str

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.dtype != np.uint8:
            raise ValueError("raster pixels must be a (h, w, c) uint8 array")
        if self.role not in ALL_ROLES:
            raise ValueError(f"unknown raster role {self.role!r}")
        expected = 1 if self.role in DEPTH_ROLES else 3
        if px.shape[2] != expected:
            raise ValueError(
                f"role {self.role!r} needs {expected} channel(s), got {px.shape[2]}"
            )
        self.pixels = px

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def channels(self):
        return self.pixels.shape[2]

    def to_grid(self) -> np.ndarray:
        """Float64 view of the pixels scaled to [0, 1]."""
        return self.pixels.astype(np.float64) / 255.0


def save_png(raster: Raster, path):
    px = raster.pixels
    img = Image.fromarray(px[:, :, 0] if px.shape[2] == 1 else px)
    img.save(path, format="PNG")


def load_png(path, role: str) -> Raster:
    with Image.open(path) as img:
        expected = "L" if role in DEPTH_ROLES else "RGB"
        if img.mode != expected:
            img = img.convert(expected)
        px = np.asarray(img, dtype=np.uint8)
    return Raster(pixels=px, role=role)
