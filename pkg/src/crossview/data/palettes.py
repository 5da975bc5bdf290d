"""Class/color palettes for the segmentation masks.

Masks travel as full-color RGB rasters; a palette maps colors to class
indices and back. Encoding and decoding are exact inverses as long as
every pixel color belongs to the palette.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import UnknownColor
from .rasters import Raster, SEG_ROLES


@dataclass(frozen=True)
class SegPalette:
    """Ordered (class_name, rgb) table for one mask family."""

    entries: tuple
    kind: str  # "satellite" | "ground"

    def __post_init__(self):
        colors = [tuple(c) for _, c in self.entries]
        if len(set(colors)) != len(colors):
            raise ValueError(f"{self.kind} palette has duplicate colors")

    def __len__(self):
        return len(self.entries)

    @property
    def class_names(self):
        return [name for name, _ in self.entries]

    @property
    def colors(self):
        return np.array([c for _, c in self.entries], dtype=np.uint8)

    def index_of(self, class_name):
        return self.class_names.index(class_name)


SATELLITE_PALETTE = SegPalette(
    entries=(
        ("high_vegetation", (0, 255, 0)),
        ("buildings", (0, 0, 255)),
        ("low_vegetation", (0, 255, 255)),
        ("roads", (255, 255, 255)),
        ("cars", (255, 255, 0)),
        ("clutter", (255, 0, 0)),
    ),
    kind="satellite",
)

GROUND_PALETTE = SegPalette(
    entries=(
        ("sky", (70, 130, 180)),
        ("road", (128, 64, 128)),
        ("sidewalk", (244, 35, 232)),
        ("building", (70, 70, 70)),
        ("vegetation", (107, 142, 35)),
        ("terrain", (152, 251, 152)),
        ("vehicle", (0, 0, 142)),
        ("clutter", (255, 0, 0)),
    ),
    kind="ground",
)


def _pack(rgb):
    r, g, b = (np.asarray(v, dtype=np.int64) for v in rgb)
    return (r << 16) | (g << 8) | b


def decode_mask(raster: Raster, palette: SegPalette) -> np.ndarray:
    """Turn a color-coded mask raster into a (height, width) class-index grid.

    Raises UnknownColor at the first pixel (row-major scan) whose color has
    no palette entry.
    """
    if raster.role not in SEG_ROLES:
        raise ValueError(f"decode_mask expects a segmentation raster, got role {raster.role!r}")
    px = raster.pixels
    codes = _pack((px[:, :, 0], px[:, :, 1], px[:, :, 2]))
    grid = np.full(codes.shape, -1, dtype=np.int64)
    for idx, (_, color) in enumerate(palette.entries):
        grid[codes == _pack(color)] = idx
    if (grid < 0).any():
        y, x = np.argwhere(grid < 0)[0]
        raise UnknownColor(int(x), int(y), px[y, x])
    return grid


def encode_mask(grid: np.ndarray, palette: SegPalette, role: str) -> Raster:
    """Render a class-index grid back into a color-coded mask raster."""
    grid = np.asarray(grid)
    if grid.min() < 0 or grid.max() >= len(palette):
        raise ValueError("class index outside palette range")
    return Raster(pixels=palette.colors[grid], role=role)
