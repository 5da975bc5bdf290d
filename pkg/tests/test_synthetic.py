import filecmp
import os

import numpy as np
import pytest

from crossview import network
from crossview.data import (
    SATELLITE_PALETTE,
    decode_mask,
    generate_synthetic_dataset,
    load_manifest,
)


def _generate(tmpdir, **kw):
    cfg = network.make_model_config(kw.pop("variant", "quad"))
    defaults = dict(
        seed=7, n_samples=6, sat_size=64, config=cfg, out_dir=str(tmpdir),
        pano_width=64, pano_height=128,
    )
    defaults.update(kw)
    return generate_synthetic_dataset(**defaults)


def test_same_seed_twice_gives_byte_identical_files(tmp_path):
    m1 = _generate(tmp_path / "a")
    m2 = _generate(tmp_path / "b")
    names = sorted(os.listdir(tmp_path / "a"))
    assert names == sorted(os.listdir(tmp_path / "b"))
    for name in names:
        assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False), name
    assert [r.id for r in m1.records] == [r.id for r in m2.records]


def test_different_seed_changes_content(tmp_path):
    _generate(tmp_path / "a", seed=1)
    _generate(tmp_path / "b", seed=2)
    same = filecmp.cmp(
        tmp_path / "a" / "sample_0000_sat_rgb.png",
        tmp_path / "b" / "sample_0000_sat_rgb.png",
        shallow=False,
    )
    assert not same


def test_ground_masks_decode_without_unknown_color(tmp_path):
    manifest = _generate(tmp_path)
    for record in manifest.records:
        raster = manifest.load_raster(record, "ground_seg")
        grid = decode_mask(raster, SATELLITE_PALETTE)  # nearest warp keeps palette colors
        assert grid.min() >= 0 and grid.max() < len(SATELLITE_PALETTE)


def test_satellite_mask_is_exact_palette_image(tmp_path):
    manifest = _generate(tmp_path)
    raster = manifest.load_raster(manifest.records[0], "sat_seg")
    decode_mask(raster, SATELLITE_PALETTE)  # raises on any off-palette pixel


def test_split_counts_and_square_satellites(tmp_path):
    manifest = _generate(tmp_path, n_samples=9, n_test=3)
    assert len(manifest.split("train")) == 6
    assert len(manifest.split("test")) == 3
    for record in manifest.records:
        sat = manifest.load_raster(record, "sat_rgb")
        assert sat.width == sat.height == 64
        ground = manifest.load_raster(record, "ground_rgb")
        assert (ground.width, ground.height) == (64, 128)


def test_quintuple_adds_depth_raster(tmp_path):
    manifest = _generate(tmp_path, variant="quintuple")
    record = manifest.records[0]
    assert "ground_depth" in record.paths
    depth = manifest.load_raster(record, "ground_depth")
    assert depth.channels == 1
    col = depth.pixels[:, 0, 0].astype(int)
    assert col[0] > col[-1]  # top of the panorama is farther


def test_matching_pair_correlates_maximally_at_shift_zero(tmp_path):
    """Brute-force correlation of identity-like (block-averaged) features:
    the unrotated ground panorama must align with its own satellite warp."""
    from crossview import geometry

    manifest = _generate(tmp_path, n_samples=4, rgb_noise=4.0)
    spec = geometry.PolarSpec(64, 128, "bilinear")

    def block_features(pixels, block_w=8, block_h=32):
        g = pixels.astype(np.float64) / 255.0
        h, w, c = g.shape
        return g.reshape(h // block_h, block_h, w // block_w, block_w, c).mean(axis=(1, 3))

    def brute_force_scores(fa, fg):
        w_a = fa.shape[1]
        scores = np.zeros(w_a)
        for i in range(w_a):
            acc = 0.0
            for c in range(fa.shape[2]):
                for h in range(fa.shape[0]):
                    for w in range(fg.shape[1]):
                        acc += fa[h, (i + w) % w_a, c] * fg[h, w, c]
            scores[i] = acc
        return scores

    for record in manifest.records:
        sat = manifest.load_raster(record, "sat_rgb")
        ground = manifest.load_raster(record, "ground_rgb")
        fa = block_features(geometry.polar_transform(sat, spec).pixels)
        fg = block_features(ground.pixels)
        scores = brute_force_scores(fa, fg)
        assert int(np.argmax(scores)) == 0


def test_manifest_round_trip_and_relative_paths(tmp_path):
    manifest = _generate(tmp_path)
    loaded = load_manifest(tmp_path / "manifest.json")
    assert loaded.seed == 7
    assert [r.id for r in loaded.records] == [r.id for r in manifest.records]
    raster = loaded.load_raster(loaded.records[0], "sat_rgb")
    assert raster.width == 64


def test_manifest_rejects_duplicate_ids(tmp_path):
    import json

    manifest = _generate(tmp_path)
    path = tmp_path / "manifest.json"
    raw = json.loads(path.read_text())
    raw["records"].append(raw["records"][0])
    path.write_text(json.dumps(raw))
    with pytest.raises(ValueError):
        load_manifest(path)


def test_generator_validates_arguments(tmp_path):
    cfg = network.make_model_config("quad")
    with pytest.raises(ValueError):
        generate_synthetic_dataset(seed=0, n_samples=1, sat_size=64, config=cfg, out_dir=str(tmp_path))
    with pytest.raises(ValueError):
        generate_synthetic_dataset(seed=0, n_samples=4, sat_size=16, config=cfg, out_dir=str(tmp_path))
