"""Sample model, palettes, synthetic generation and on-disk formats."""

from .fvol import read_feature_volume, write_feature_volume
from .manifest import DatasetManifest, ManifestRecord, load_manifest
from .palettes import GROUND_PALETTE, SATELLITE_PALETTE, SegPalette, decode_mask, encode_mask
from .rasters import ALL_ROLES, DEPTH_ROLES, RGB_ROLES, SEG_ROLES, Raster, load_png, save_png
from .synthetic import generate_synthetic_dataset

__all__ = [
    "ALL_ROLES",
    "DEPTH_ROLES",
    "RGB_ROLES",
    "SEG_ROLES",
    "DatasetManifest",
    "GROUND_PALETTE",
    "ManifestRecord",
    "Raster",
    "SATELLITE_PALETTE",
    "SegPalette",
    "decode_mask",
    "encode_mask",
    "generate_synthetic_dataset",
    "load_manifest",
    "load_png",
    "read_feature_volume",
    "save_png",
    "write_feature_volume",
]
