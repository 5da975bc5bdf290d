"""Deterministic synthetic scene generator.

Each sample is built from one random top-down layout: colored regions for
vegetation, buildings, a road band, cars and clutter. The satellite mask is
the exact class rasterization; the satellite RGB is a shaded rendering of
the same layout; the ground panorama is the polar warp of the satellite RGB
plus bounded per-pixel noise; the ground mask is the nearest-neighbor polar
warp of the satellite mask (so its colors stay inside the satellite
palette). Everything is a pure function of the seed.
"""

import os

import numpy as np

from .. import geometry
from .manifest import DatasetManifest, ManifestRecord
from .palettes import SATELLITE_PALETTE, encode_mask
from .rasters import Raster, save_png

# satellite palette indices
_HIGH_VEG, _BUILDING, _LOW_VEG, _ROAD, _CAR, _CLUTTER = range(6)

# rendering base colors per class, deliberately distinct from the palette
_BASE_COLORS = np.array(
    [
        [40, 104, 46],  # high vegetation
        [158, 150, 146],  # buildings
        [96, 158, 86],  # low vegetation
        [105, 105, 110],  # roads
        [192, 60, 52],  # cars
        [172, 132, 92],  # clutter
    ],
    dtype=np.float64,
)


def _draw_layout(rng, size):
    """Continuous scene parameters; all entries are plain float arrays so
    layouts can be blended for confusability control."""
    return {
        "veg": np.column_stack(
            [
                rng.uniform(0, size, 5),
                rng.uniform(0, size, 5),
                rng.uniform(size / 12, size / 5, 5),
            ]
        ),
        "bld": np.column_stack(
            [
                rng.uniform(0, size, 4),
                rng.uniform(0, size, 4),
                rng.uniform(size / 16, size / 6, 4),
                rng.uniform(size / 16, size / 6, 4),
            ]
        ),
        "road": np.array(
            [rng.uniform(0, np.pi), rng.uniform(-size / 4, size / 4), rng.uniform(size / 28, size / 14)]
        ),
        "cars": np.column_stack(
            [rng.uniform(-size / 2, size / 2, 3), rng.uniform(-1.5, 1.5, 3)]
        ),
        "clutter": np.column_stack(
            [rng.uniform(0, size, 2), rng.uniform(0, size, 2), rng.uniform(2.0, size / 20, 2)]
        ),
        "shade": rng.uniform(-1.0, 1.0, 2),
        "tint": rng.uniform(-14.0, 14.0, (6, 3)),
        "instance_tint": rng.uniform(-26.0, 26.0, (12, 3)),
    }


def _blend(template, fresh, variation):
    if variation >= 1.0:
        return fresh
    return {k: template[k] + variation * (fresh[k] - template[k]) for k in fresh}


def _rasterize(layout, size):
    """Class grid plus an instance grid used only for RGB shading."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    grid = np.full((size, size), _LOW_VEG, dtype=np.int64)
    inst = np.zeros((size, size), dtype=np.int64)

    for k, (cx, cy, r) in enumerate(layout["veg"]):
        m = (xx - cx) ** 2 + (yy - cy) ** 2 < r * r
        grid[m] = _HIGH_VEG
        inst[m] = 1 + k
    for k, (cx, cy, hw, hh) in enumerate(layout["bld"]):
        m = (np.abs(xx - cx) < hw) & (np.abs(yy - cy) < hh)
        grid[m] = _BUILDING
        inst[m] = 6 + k
    ang, offset, width = layout["road"]
    c = size / 2.0
    dist = -np.sin(ang) * (xx - c) + np.cos(ang) * (yy - c) + offset
    road = np.abs(dist) < width
    grid[road] = _ROAD
    inst[road] = 0
    for t, perp in layout["cars"]:
        cx = c + t * np.cos(ang) - perp * np.sin(ang)
        cy = c + t * np.sin(ang) + perp * np.cos(ang) - offset * np.cos(ang)
        m = (np.abs(xx - cx) < 2.0) & (np.abs(yy - cy) < 2.0)
        grid[m & road] = _CAR
    for cx, cy, r in layout["clutter"]:
        m = (xx - cx) ** 2 + (yy - cy) ** 2 < r * r
        grid[m] = _CLUTTER
        inst[m] = 0
    return grid, inst


def _render_rgb(layout, grid, inst, size):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    gx, gy = layout["shade"]
    shade = 1.0 + 0.15 * (gx * (xx / size - 0.5) + gy * (yy / size - 0.5))
    base = _BASE_COLORS + layout["tint"]
    rgb = base[grid] + layout["instance_tint"][inst % 12]
    rgb *= shade[:, :, None]
    return geometry.quantize(rgb)


def generate_synthetic_dataset(
    seed: int,
    n_samples: int,
    sat_size: int,
    config,
    out_dir,
    pano_width: int = 512,
    pano_height: int = 128,
    n_test: int | None = None,
    rgb_noise: float = 8.0,
    scene_variation: float = 1.0,
    manifest_name: str = "manifest.json",
) -> DatasetManifest:
    """Write a synthetic dataset under out_dir and return its manifest.

    `config` decides which modalities exist: the four RGB/mask rasters are
    always produced, a ground depth raster is added when the model has a
    depth stream. `scene_variation` < 1 blends every layout toward a shared
    template, making scenes mutually confusable. `rgb_noise` is the
    half-range, in 8-bit levels, of the uniform noise added to the ground
    panorama only.
    """
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    if sat_size < 64:
        raise ValueError("sat_size must be >= 64")
    if n_test is None:
        n_test = max(1, n_samples // 3)
    if n_test >= n_samples:
        raise ValueError("n_test must leave at least one training sample")

    want_depth = any(s.modality == "depth" for s in config.streams)
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(seed)
    bilinear = geometry.PolarSpec(pano_width, pano_height, "bilinear")
    nearest = geometry.PolarSpec(pano_width, pano_height, "nearest")
    template = _draw_layout(rng, sat_size)

    records = []
    n_train = n_samples - n_test
    for i in range(n_samples):
        sample_id = f"sample_{i:04d}"
        layout = _blend(template, _draw_layout(rng, sat_size), scene_variation)
        grid, inst = _rasterize(layout, sat_size)

        sat_rgb = Raster(pixels=_render_rgb(layout, grid, inst, sat_size), role="sat_rgb")
        sat_seg = encode_mask(grid, SATELLITE_PALETTE, role="sat_seg")

        pano_vals = geometry.polar_transform_values(
            sat_rgb.pixels.astype(np.float64), bilinear
        )
        noise = rng.uniform(-rgb_noise, rgb_noise, pano_vals.shape)
        ground_rgb = Raster(pixels=geometry.quantize(pano_vals + noise), role="ground_rgb")

        ground_seg = geometry.polar_transform(sat_seg, nearest)
        ground_seg = Raster(pixels=ground_seg.pixels, role="ground_seg")

        rasters = {
            "sat_rgb": sat_rgb,
            "sat_seg": sat_seg,
            "ground_rgb": ground_rgb,
            "ground_seg": ground_seg,
        }
        if want_depth:
            rows = (pano_height - np.arange(pano_height, dtype=np.float64)) / pano_height
            scale = rng.uniform(0.85, 1.0)
            depth = np.tile((255.0 * scale) * rows[:, None], (1, pano_width))
            rasters["ground_depth"] = Raster(
                pixels=geometry.quantize(depth[:, :, None]), role="ground_depth"
            )

        paths = {}
        for role, raster in rasters.items():
            fname = f"{sample_id}_{role}.png"
            save_png(raster, os.path.join(out_dir, fname))
            paths[role] = fname
        records.append(
            ManifestRecord(
                id=sample_id,
                split="train" if i < n_train else "test",
                paths=paths,
            )
        )

    manifest = DatasetManifest(records=records, seed=seed, base_dir=str(out_dir))
    manifest.save(os.path.join(out_dir, manifest_name))
    return manifest
