import numpy as np
import pytest

from crossview.data import GROUND_PALETTE, SATELLITE_PALETTE, decode_mask, encode_mask
from crossview.data.rasters import Raster
from crossview.errors import UnknownColor


def test_satellite_palette_has_the_six_reference_classes():
    assert len(SATELLITE_PALETTE) == 6
    assert SATELLITE_PALETTE.entries[0] == ("high_vegetation", (0, 255, 0))
    assert SATELLITE_PALETTE.entries[1] == ("buildings", (0, 0, 255))
    assert SATELLITE_PALETTE.entries[2] == ("low_vegetation", (0, 255, 255))
    assert SATELLITE_PALETTE.entries[3] == ("roads", (255, 255, 255))
    assert SATELLITE_PALETTE.entries[4] == ("cars", (255, 255, 0))
    assert SATELLITE_PALETTE.entries[5] == ("clutter", (255, 0, 0))


def test_palette_colors_pairwise_distinct():
    for palette in (SATELLITE_PALETTE, GROUND_PALETTE):
        colors = [c for _, c in palette.entries]
        assert len(set(colors)) == len(colors)
    assert len(GROUND_PALETTE) == 8


def test_decode_green_pixel_is_high_vegetation():
    px = np.zeros((1, 1, 3), dtype=np.uint8)
    px[0, 0] = (0, 255, 0)
    grid = decode_mask(Raster(pixels=px, role="sat_seg"), SATELLITE_PALETTE)
    assert grid[0, 0] == 0


def test_decode_uniform_white_is_roads_everywhere():
    px = np.full((5, 7, 3), 255, dtype=np.uint8)
    grid = decode_mask(Raster(pixels=px, role="sat_seg"), SATELLITE_PALETTE)
    assert grid.shape == (5, 7)
    assert (grid == 3).all()


def test_decode_unknown_color_reports_first_offender():
    px = np.zeros((2, 3, 3), dtype=np.uint8)
    px[:] = (0, 255, 0)
    px[1, 2] = (3, 4, 5)
    with pytest.raises(UnknownColor) as exc:
        decode_mask(Raster(pixels=px, role="sat_seg"), SATELLITE_PALETTE)
    assert exc.value.x == 2 and exc.value.y == 1
    assert exc.value.rgb == (3, 4, 5)


@pytest.mark.parametrize("palette,role", [(SATELLITE_PALETTE, "sat_seg"), (GROUND_PALETTE, "ground_seg")])
def test_encode_decode_round_trip_random_masks(palette, role):
    rng = np.random.default_rng(4)
    for _ in range(10):
        grid = rng.integers(0, len(palette), size=(9, 13))
        raster = encode_mask(grid, palette, role=role)
        assert np.array_equal(decode_mask(raster, palette), grid)
        # and the inverse direction on the pixel level
        again = encode_mask(decode_mask(raster, palette), palette, role=role)
        assert np.array_equal(again.pixels, raster.pixels)


def test_decode_requires_a_seg_role():
    px = np.zeros((2, 2, 3), dtype=np.uint8)
    with pytest.raises(ValueError):
        decode_mask(Raster(pixels=px, role="sat_rgb"), SATELLITE_PALETTE)
